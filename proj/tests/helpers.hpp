#pragma once

#include <string>
#include <vector>

#include "cas/rng.hpp"
#include "cas/types.hpp"

namespace cas::test {

inline SerpItem make_item(int rank, std::vector<int> d = {0, 0, 0},
                          std::vector<int> r = {0, 0, 0, 0}) {
    SerpItem it;
    it.item_id = "item" + std::to_string(rank);
    it.perceived_rank = rank;
    it.item_type = ItemType::Web;
    it.offset_top = 200.0 * (rank - 1);
    it.column = 0;
    it.width = 500;
    it.height = 100;
    it.d_ratings.counts = std::move(d);
    it.r_ratings.counts = std::move(r);
    return it;
}

inline Session make_session(int n_items, const std::string& id = "s1") {
    Session s;
    s.session_id = id;
    s.query = "q";
    for (int k = 1; k <= n_items; ++k) s.items.push_back(make_item(k));
    return s;
}

// random but always-valid session for property tests
inline Session random_session(Rng& rng, const std::string& id) {
    Session s;
    s.session_id = id;
    s.query = "query " + std::to_string(rng.below(1000));
    const int n = 1 + static_cast<int>(rng.below(10));
    for (int k = 1; k <= n; ++k) {
        SerpItem it = make_item(k);
        it.item_id = id + "-i" + std::to_string(k);
        it.item_type = static_cast<ItemType>(rng.below(kNumItemTypes));
        it.offset_top = std::floor(rng.uniform(0, 3000));
        it.column = rng.bernoulli(0.15) ? 1 : 0;
        it.width = std::floor(rng.uniform(100, 1000));
        it.height = std::floor(rng.uniform(50, 500));
        for (int g = 0; g < 3; ++g)
            it.d_ratings.counts[g] = static_cast<int>(rng.below(4));
        for (int g = 0; g < 4; ++g)
            it.r_ratings.counts[g] = static_cast<int>(rng.below(4));
        it.clicked = rng.bernoulli(0.2);
        it.mouse_fixated = rng.bernoulli(0.4);
        s.items.push_back(std::move(it));
    }
    if (rng.bernoulli(0.7)) s.satisfaction = rng.bernoulli(0.6);
    return s;
}

inline std::vector<Session> random_sessions(uint64_t seed, int n) {
    Rng rng(seed);
    std::vector<Session> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(random_session(rng, "rs" + std::to_string(i)));
    return out;
}

}  // namespace cas::test
