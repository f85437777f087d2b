#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cas {

// splitmix64 step; used to derive independent stream seeds from (seed, index)
// so per-session generation is independent of scheduling.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled draw helpers. The engine's output sequence is
// fixed by the standard; std::shuffle / std::*_distribution are not, so all
// distributions are implemented here to keep seeded runs portable.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) { return n ? eng_() % n : 0; }

    bool bernoulli(double p) { return uniform() < p; }

    // index drawn with probability proportional to probs[i]
    int categorical(std::span<const double> probs) {
        double total = 0.0;
        for (double p : probs) total += p;
        double u = uniform() * total;
        double acc = 0.0;
        for (size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    std::vector<int> multinomial(int n, std::span<const double> probs) {
        std::vector<int> counts(probs.size(), 0);
        for (int i = 0; i < n; ++i) ++counts[categorical(probs)];
        return counts;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace cas
