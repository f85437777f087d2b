#include "cas/agreement.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace cas {

const char* label_kind_name(LabelKind k) {
    return k == LabelKind::D ? "D" : "R";
}

LabelKind label_kind_from_name(const std::string& name) {
    if (name == "D") return LabelKind::D;
    if (name == "R") return LabelKind::R;
    throw Error("unknown label kind '" + name + "' (expected D or R)");
}

std::optional<double> cohen_kappa(std::span<const int> a,
                                  std::span<const int> b) {
    if (a.size() != b.size()) throw Error("cohen_kappa: length mismatch");
    if (a.empty()) return std::nullopt;
    const double n = static_cast<double>(a.size());
    std::map<int, double> ma, mb;
    double agree = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma[a[i]] += 1.0;
        mb[b[i]] += 1.0;
        if (a[i] == b[i]) agree += 1.0;
    }
    const double p_o = agree / n;
    double p_e = 0;
    for (const auto& [cat, ca] : ma) {
        auto it = mb.find(cat);
        if (it != mb.end()) p_e += (ca / n) * (it->second / n);
    }
    if (p_e >= 1.0 - 1e-15) return p_o >= 1.0 ? std::optional<double>(1.0)
                                              : std::nullopt;
    return (p_o - p_e) / (1.0 - p_e);
}

namespace {

// worker -> item -> grade (first record wins on duplicates)
using WorkerItems = std::map<std::string, std::map<std::string, int>>;

WorkerItems group_by_worker(std::span<const RatingRecord> records) {
    WorkerItems out;
    for (const RatingRecord& r : records)
        out[r.worker_id].emplace(r.item_id, r.grade);
    return out;
}

std::optional<double> pair_kappa(const std::map<std::string, int>& wa,
                                 const std::map<std::string, int>& wb) {
    std::vector<int> a, b;
    for (const auto& [item, grade] : wa) {
        auto it = wb.find(item);
        if (it != wb.end()) {
            a.push_back(grade);
            b.push_back(it->second);
        }
    }
    if (a.empty()) return std::nullopt;
    return cohen_kappa(a, b);
}

}  // namespace

std::optional<double> average_pairwise_kappa(
    std::span<const RatingRecord> records) {
    const WorkerItems by_worker = group_by_worker(records);
    std::vector<const std::map<std::string, int>*> workers;
    workers.reserve(by_worker.size());
    for (const auto& [id, items] : by_worker) workers.push_back(&items);

    double sum = 0;
    size_t count = 0;
    for (size_t i = 0; i < workers.size(); ++i)
        for (size_t j = i + 1; j < workers.size(); ++j) {
            const auto k = pair_kappa(*workers[i], *workers[j]);
            if (k) {
                sum += *k;
                ++count;
            }
        }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::optional<double> krippendorff_alpha(std::span<const RatingRecord> records,
                                         AlphaMetric metric) {
    // grades per item
    std::map<std::string, std::vector<int>> units;
    int max_grade = 0;
    for (const RatingRecord& r : records) {
        units[r.item_id].push_back(r.grade);
        max_grade = std::max(max_grade, r.grade);
    }
    const size_t G = static_cast<size_t>(max_grade) + 1;

    // coincidence matrix over ordered pairs within units
    std::vector<std::vector<double>> o(G, std::vector<double>(G, 0.0));
    for (const auto& [item, grades] : units) {
        const size_t m = grades.size();
        if (m < 2) continue;
        const double w = 1.0 / static_cast<double>(m - 1);
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < m; ++j)
                if (i != j)
                    o[static_cast<size_t>(grades[i])]
                     [static_cast<size_t>(grades[j])] += w;
    }
    std::vector<double> nc(G, 0.0);
    double n = 0;
    for (size_t c = 0; c < G; ++c)
        for (size_t k = 0; k < G; ++k) {
            nc[c] += o[c][k];
            n += o[c][k];
        }
    if (n <= 1) return std::nullopt;

    auto delta2 = [&](size_t c, size_t k) -> double {
        if (c == k) return 0.0;
        if (metric == AlphaMetric::Nominal) return 1.0;
        // ordinal: cumulative coincidence mass between the two categories
        const size_t lo = std::min(c, k), hi = std::max(c, k);
        double s = 0;
        for (size_t g = lo; g <= hi; ++g) s += nc[g];
        s -= 0.5 * (nc[c] + nc[k]);
        return s * s;
    };

    double d_o = 0, d_e = 0;
    for (size_t c = 0; c < G; ++c)
        for (size_t k = 0; k < G; ++k) {
            const double d2 = delta2(c, k);
            d_o += o[c][k] * d2;
            d_e += nc[c] * (nc[k] - (c == k ? 1.0 : 0.0)) * d2;
        }
    d_o /= n;
    d_e /= n * (n - 1.0);
    if (d_e <= 0) return std::nullopt;
    return 1.0 - d_o / d_e;
}

namespace {

std::string normalize_text(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // trims leading whitespace
    for (char ch : s) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(ch))));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

bool quote_ok(const RatingRecord& r) {
    if (!r.justification_text || !r.source_text) return true;
    const std::string j = normalize_text(*r.justification_text);
    if (j.empty()) return true;
    return normalize_text(*r.source_text).find(j) != std::string::npos;
}

// mean pairwise kappa of each worker against the others, per label kind,
// averaged over kinds with a defined value
std::map<std::string, double> disagreement_scores(
    std::span<const RatingRecord> records) {
    std::map<std::string, double> sum;
    std::map<std::string, int> cnt;
    for (LabelKind kind : {LabelKind::D, LabelKind::R}) {
        std::vector<RatingRecord> of_kind;
        for (const RatingRecord& r : records)
            if (r.label_kind == kind) of_kind.push_back(r);
        const WorkerItems by_worker = group_by_worker(of_kind);
        std::vector<std::pair<std::string, const std::map<std::string, int>*>> ws;
        for (const auto& [id, items] : by_worker) ws.emplace_back(id, &items);
        for (size_t i = 0; i < ws.size(); ++i) {
            double s = 0;
            int c = 0;
            for (size_t j = 0; j < ws.size(); ++j) {
                if (i == j) continue;
                const auto k = pair_kappa(*ws[i].second, *ws[j].second);
                if (k) {
                    s += *k;
                    ++c;
                }
            }
            if (c > 0) {
                sum[ws[i].first] += s / c;
                cnt[ws[i].first] += 1;
            }
        }
    }
    std::map<std::string, double> out;
    for (const auto& [w, s] : sum) out[w] = s / cnt[w];
    return out;
}

}  // namespace

FilterResult filter_spammers(std::span<const RatingRecord> records,
                             const SpamPolicy& policy) {
    std::map<std::string, size_t> ratings_per_worker;
    for (const RatingRecord& r : records) ++ratings_per_worker[r.worker_id];

    std::map<std::string, std::set<std::string>> reasons;
    for (const auto& [worker, count] : ratings_per_worker)
        if (count < static_cast<size_t>(policy.min_ratings))
            reasons[worker].insert("min_ratings");
    if (policy.require_quote) {
        for (const RatingRecord& r : records)
            if (!quote_ok(r)) reasons[r.worker_id].insert("quote_mismatch");
    }

    std::vector<RatingRecord> kept;
    for (const RatingRecord& r : records)
        if (!reasons.contains(r.worker_id)) kept.push_back(r);

    if (policy.disagreement_threshold) {
        // iterate to a fixed point; pair kappas are pair-local, so only the
        // mean over remaining partners changes between rounds
        for (;;) {
            const auto scores = disagreement_scores(kept);
            std::set<std::string> drop;
            for (const auto& [worker, score] : scores)
                if (score < *policy.disagreement_threshold) drop.insert(worker);
            if (drop.empty()) break;
            for (const auto& w : drop) reasons[w].insert("disagreement");
            std::erase_if(kept, [&](const RatingRecord& r) {
                return drop.contains(r.worker_id);
            });
        }
    }

    FilterResult out;
    out.kept = std::move(kept);
    for (const auto& [worker, why] : reasons) {
        RemovedWorker rw;
        rw.worker_id = worker;
        rw.reasons.assign(why.begin(), why.end());
        rw.n_ratings = ratings_per_worker[worker];
        out.removed.push_back(std::move(rw));
    }
    return out;
}

std::map<std::string, ItemHistograms> aggregate_histograms(
    std::span<const RatingRecord> records) {
    std::map<std::string, ItemHistograms> out;
    for (const RatingRecord& r : records) {
        ItemHistograms& h = out[r.item_id];
        if (r.label_kind == LabelKind::D) {
            if (r.grade < 0 || r.grade > 2)
                throw Error("D grade out of range for item " + r.item_id);
            ++h.d.counts[static_cast<size_t>(r.grade)];
        } else {
            if (r.grade < 0 || r.grade > 3)
                throw Error("R grade out of range for item " + r.item_id);
            ++h.r.counts[static_cast<size_t>(r.grade)];
        }
    }
    return out;
}

AgreementReport agreement_report(std::span<const RatingRecord> records,
                                 const SpamPolicy& policy, AlphaMetric metric) {
    AgreementReport report;
    report.filter = filter_spammers(records, policy);

    std::set<std::string> removed_ids;
    for (const RemovedWorker& w : report.filter.removed)
        removed_ids.insert(w.worker_id);

    for (LabelKind kind : {LabelKind::D, LabelKind::R}) {
        AgreementStats st;
        std::set<std::string> workers, removed_workers;
        std::vector<RatingRecord> kept_of_kind;
        for (const RatingRecord& r : records) {
            if (r.label_kind != kind) continue;
            ++st.ratings_total;
            workers.insert(r.worker_id);
            if (removed_ids.contains(r.worker_id)) {
                ++st.ratings_removed;
                removed_workers.insert(r.worker_id);
            } else {
                kept_of_kind.push_back(r);
            }
        }
        st.workers_total = workers.size();
        st.workers_removed = removed_workers.size();
        st.kappa = average_pairwise_kappa(kept_of_kind);
        st.alpha = krippendorff_alpha(kept_of_kind, metric);
        report.per_kind[kind] = st;
    }
    return report;
}

}  // namespace cas
