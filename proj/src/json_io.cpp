#include "cas/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cas/manifest.hpp"

namespace cas {

using nlohmann::json;

void to_json(json& j, const RatingHistogram& h) { j = h.counts; }

void from_json(const json& j, RatingHistogram& h) {
    h.counts = j.get<std::vector<int>>();
}

void to_json(json& j, const SerpItem& it) {
    j = json{{"item_id", it.item_id},
             {"perceived_rank", it.perceived_rank},
             {"item_type", item_type_name(it.item_type)},
             {"offset_top", it.offset_top},
             {"column", it.column},
             {"width", it.width},
             {"height", it.height},
             {"d_ratings", it.d_ratings},
             {"r_ratings", it.r_ratings},
             {"clicked", it.clicked},
             {"mouse_fixated", it.mouse_fixated}};
}

void from_json(const json& j, SerpItem& it) {
    it.item_id = j.at("item_id").get<std::string>();
    it.perceived_rank = j.at("perceived_rank").get<int>();
    it.item_type = item_type_from_name(j.at("item_type").get<std::string>());
    it.offset_top = j.at("offset_top").get<double>();
    it.column = j.at("column").get<int>();
    it.width = j.at("width").get<double>();
    it.height = j.at("height").get<double>();
    it.d_ratings = j.at("d_ratings").get<RatingHistogram>();
    it.r_ratings = j.at("r_ratings").get<RatingHistogram>();
    // behavioral fields are optional so rating+layout SERPs parse as-is
    it.clicked = j.value("clicked", false);
    it.mouse_fixated = j.value("mouse_fixated", false);
}

void to_json(json& j, const Session& s) {
    j = json{{"session_id", s.session_id},
             {"query", s.query},
             {"items", s.items}};
    if (s.satisfaction) j["satisfaction"] = *s.satisfaction;
}

void from_json(const json& j, Session& s) {
    s.session_id = j.at("session_id").get<std::string>();
    s.query = j.value("query", std::string());
    s.items = j.at("items").get<std::vector<SerpItem>>();
    s.satisfaction.reset();
    if (j.contains("satisfaction") && !j.at("satisfaction").is_null())
        s.satisfaction = j.at("satisfaction").get<bool>();
}

void to_json(json& j, const CasParams& p) {
    j = json{{"attention_weights", p.attention_weights},
             {"alpha_intercept", p.alpha_intercept},
             {"alpha_weights", p.alpha_weights},
             {"fixation_miss_logit", p.fixation_miss_logit},
             {"tau_d", p.tau_d},
             {"tau_r", p.tau_r},
             {"tau_0", p.tau_0}};
}

void from_json(const json& j, CasParams& p) {
    p.attention_weights = j.at("attention_weights").get<std::vector<double>>();
    p.alpha_intercept = j.at("alpha_intercept").get<double>();
    p.alpha_weights = j.at("alpha_weights").get<std::vector<double>>();
    p.fixation_miss_logit = j.value("fixation_miss_logit", 0.0);
    p.tau_d = j.at("tau_d").get<std::vector<double>>();
    p.tau_r = j.at("tau_r").get<std::vector<double>>();
    p.tau_0 = j.at("tau_0").get<double>();
    if (p.alpha_weights.size() != 4 || p.tau_d.size() != 3 || p.tau_r.size() != 4)
        throw Error("CasParams: alpha_weights/tau_d/tau_r must have 4/3/4 entries");
}

void to_json(json& j, const ModelVariant& v) {
    j = json{{"use_rank", v.use_rank},
             {"use_classes", v.use_classes},
             {"use_geometry", v.use_geometry},
             {"use_d_labels", v.use_d_labels},
             {"use_sat_term", v.use_sat_term},
             {"reg_lambda", v.reg_lambda}};
}

void from_json(const json& j, ModelVariant& v) {
    v.use_rank = j.at("use_rank").get<bool>();
    v.use_classes = j.at("use_classes").get<bool>();
    v.use_geometry = j.at("use_geometry").get<bool>();
    v.use_d_labels = j.at("use_d_labels").get<bool>();
    v.use_sat_term = j.at("use_sat_term").get<bool>();
    v.reg_lambda = j.at("reg_lambda").get<double>();
    if (v.reg_lambda < 0) throw Error("ModelVariant: reg_lambda must be >= 0");
    if (!v.use_rank && !v.use_classes && !v.use_geometry)
        throw Error("ModelVariant: at least one feature group must be enabled");
}

void to_json(json& j, const FeatureNormalization& n) {
    j = json{{"fitted", n.fitted}, {"mean", n.mean}, {"stddev", n.stddev}};
}

void from_json(const json& j, FeatureNormalization& n) {
    n.fitted = j.at("fitted").get<bool>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto stddev = j.at("stddev").get<std::vector<double>>();
    if (mean.size() != FeatureNormalization::kCount ||
        stddev.size() != FeatureNormalization::kCount)
        throw Error("FeatureNormalization: mean/stddev must have 5 entries");
    std::copy(mean.begin(), mean.end(), n.mean.begin());
    std::copy(stddev.begin(), stddev.end(), n.stddev.begin());
}

void to_json(json& j, const RatingRecord& r) {
    j = json{{"worker_id", r.worker_id},
             {"item_id", r.item_id},
             {"label_kind", label_kind_name(r.label_kind)},
             {"grade", r.grade}};
    if (r.justification_text) j["justification_text"] = *r.justification_text;
    if (r.source_text) j["source_text"] = *r.source_text;
}

void from_json(const json& j, RatingRecord& r) {
    r.worker_id = j.at("worker_id").get<std::string>();
    r.item_id = j.at("item_id").get<std::string>();
    r.label_kind = label_kind_from_name(j.at("label_kind").get<std::string>());
    r.grade = j.at("grade").get<int>();
    const int max_grade = r.label_kind == LabelKind::D ? 2 : 3;
    if (r.grade < 0 || r.grade > max_grade)
        throw Error("grade " + std::to_string(r.grade) + " out of range for " +
                    label_kind_name(r.label_kind) + " label");
    r.justification_text.reset();
    r.source_text.reset();
    if (j.contains("justification_text") && !j.at("justification_text").is_null())
        r.justification_text = j.at("justification_text").get<std::string>();
    if (j.contains("source_text") && !j.at("source_text").is_null())
        r.source_text = j.at("source_text").get<std::string>();
}

// --- JSONL -------------------------------------------------------------------

namespace {

template <typename T>
std::vector<T> read_jsonl(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("cannot open ") + what + " file: " + path);
    std::vector<T> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const std::exception& e) {
            throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    return out;
}

json opt_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::vector<Session> read_sessions_jsonl(const std::string& path) {
    return read_jsonl<Session>(path, "sessions");
}

void write_sessions_jsonl(const std::string& path,
                          std::span<const Session> sessions) {
    std::ofstream out = open_out(path);
    for (const Session& s : sessions) out << json(s).dump() << "\n";
}

void write_truth_jsonl(const std::string& path,
                       std::span<const SessionTruth> truth) {
    std::ofstream out = open_out(path);
    for (const SessionTruth& t : truth) {
        json j{{"session_id", t.session_id},
               {"examined", t.examined},
               {"exam_probs", t.exam_probs},
               {"attr_probs", t.attr_probs},
               {"realized_utility", t.realized_utility},
               {"metric_utility", t.metric_utility},
               {"sat_prob", t.sat_prob}};
        out << j.dump() << "\n";
    }
}

std::vector<RatingRecord> read_ratings_jsonl(const std::string& path) {
    return read_jsonl<RatingRecord>(path, "ratings");
}

void write_ratings_jsonl(const std::string& path,
                         std::span<const RatingRecord> records) {
    std::ofstream out = open_out(path);
    for (const RatingRecord& r : records) out << json(r).dump() << "\n";
}

// --- model files ---------------------------------------------------------

namespace {

json pbm_to_json(const PbmModel& m) {
    return json{{"gamma", m.params.gamma},
                {"attr", m.params.attr},
                {"sat_intercept", m.sat_intercept}};
}

json ubm_to_json(const UbmModel& m) {
    return json{{"gamma", m.params.gamma},
                {"attr", m.params.attr},
                {"sat_intercept", m.sat_intercept},
                {"source", m.external ? "external" : "local"}};
}

}  // namespace

void save_model(const std::string& path, const AnyModel& model,
                const std::string& manifest_ref) {
    json j;
    j["format_version"] = kModelFormatVersion;
    if (const auto* cas_m = std::get_if<CasModel>(&model)) {
        j["model_type"] = "cas";
        j["variant"] = cas_m->variant;
        j["params"] = cas_m->params;
        j["normalization"] = cas_m->norms;
    } else if (const auto* pbm_m = std::get_if<PbmModel>(&model)) {
        j["model_type"] = "pbm";
        j.update(pbm_to_json(*pbm_m));
    } else if (const auto* ubm_m = std::get_if<UbmModel>(&model)) {
        j["model_type"] = "ubm";
        j.update(ubm_to_json(*ubm_m));
    } else if (const auto* rnd_m = std::get_if<RandomModel>(&model)) {
        j["model_type"] = "random";
        j["p_click"] = rnd_m->params.p_click;
        j["p_sat"] = rnd_m->params.p_sat;
    } else if (const auto* dcg_m = std::get_if<DcgModel>(&model)) {
        j["model_type"] = "dcg";
        j["depth"] = dcg_m->depth;
        j["sat_intercept"] = dcg_m->sat_intercept;
    }
    if (!manifest_ref.empty()) j["manifest_ref"] = manifest_ref;
    save_json(path, j);
}

namespace {

UbmParams ubm_params_from_json(const json& j) {
    UbmParams p;
    p.gamma = j.at("gamma").get<std::vector<std::vector<double>>>();
    p.attr = j.at("attr").get<std::array<double, 4>>();
    for (size_t r = 0; r < p.gamma.size(); ++r)
        if (p.gamma[r].size() != r + 1)
            throw Error("ubm gamma row " + std::to_string(r + 1) + " must have " +
                        std::to_string(r + 1) + " entries");
    return p;
}

}  // namespace

AnyModel load_model(const std::string& path) {
    const json j = load_json(path);
    const int version = j.value("format_version", 0);
    if (version != kModelFormatVersion)
        throw Error(path + ": unsupported model format_version " +
                    std::to_string(version));
    const std::string type = j.at("model_type").get<std::string>();
    if (type == "cas") {
        CasModel m;
        m.variant = j.at("variant").get<ModelVariant>();
        m.params = j.at("params").get<CasParams>();
        m.norms = j.at("normalization").get<FeatureNormalization>();
        if (static_cast<int>(m.params.attention_weights.size()) !=
            m.variant.feature_dim())
            throw Error(path + ": attention weight count does not match variant");
        return m;
    }
    if (type == "pbm") {
        PbmModel m;
        m.params.gamma = j.at("gamma").get<std::vector<double>>();
        m.params.attr = j.at("attr").get<std::array<double, 4>>();
        m.sat_intercept = j.value("sat_intercept", 0.0);
        return m;
    }
    if (type == "ubm") {
        UbmModel m;
        m.params = ubm_params_from_json(j);
        m.sat_intercept = j.value("sat_intercept", 0.0);
        m.external = j.value("source", std::string("local")) == "external";
        return m;
    }
    if (type == "random") {
        RandomModel m;
        m.params.p_click = j.at("p_click").get<double>();
        m.params.p_sat = j.at("p_sat").get<double>();
        return m;
    }
    if (type == "dcg") {
        DcgModel m;
        m.depth = j.at("depth").get<int>();
        m.sat_intercept = j.value("sat_intercept", 0.0);
        return m;
    }
    throw Error(path + ": unknown model_type '" + type + "'");
}

UbmParams load_ubm_params(const std::string& path) {
    return ubm_params_from_json(load_json(path));
}

// --- configs and reports ---------------------------------------------------

json sim_config_to_json(const SimConfig& c) {
    json tiers = json::array();
    for (const RatingTier& t : c.ratings.tiers)
        tiers.push_back(json{{"d_probs", t.d_probs}, {"r_probs", t.r_probs}});
    return json{
        {"n_sessions", c.n_sessions},
        {"items_per_serp", c.items_per_serp},
        {"heterogeneous_fraction", c.heterogeneous_fraction},
        {"fixation_noise", c.fixation_noise},
        {"seed", c.seed},
        {"variant", c.variant},
        {"true_params", c.true_params},
        {"normalization", c.norms},
        {"layout",
         {{"width_range", {c.layout.width_min, c.layout.width_max}},
          {"height_range", {c.layout.height_min, c.layout.height_max}},
          {"side_column_prob", c.layout.side_column_prob},
          {"item_gap", c.layout.item_gap}}},
        {"ratings",
         {{"d_raters", c.ratings.d_raters},
          {"r_raters", c.ratings.r_raters},
          {"tiers", tiers},
          {"tier_weights", c.ratings.tier_weights}}}};
}

SimConfig sim_config_from_json(const json& j) {
    SimConfig c;
    try {
        c.n_sessions = j.at("n_sessions").get<int>();
        c.items_per_serp = j.value("items_per_serp", 10);
        c.heterogeneous_fraction = j.value("heterogeneous_fraction", 0.12);
        c.fixation_noise = j.value("fixation_noise", 0.3);
        c.seed = j.value("seed", uint64_t{1});
        if (j.contains("variant")) c.variant = j.at("variant").get<ModelVariant>();
        c.true_params = j.at("true_params").get<CasParams>();
        c.norms = j.at("normalization").get<FeatureNormalization>();
        if (j.contains("layout")) {
            const json& l = j.at("layout");
            if (l.contains("width_range")) {
                c.layout.width_min = l.at("width_range").at(0).get<double>();
                c.layout.width_max = l.at("width_range").at(1).get<double>();
            }
            if (l.contains("height_range")) {
                c.layout.height_min = l.at("height_range").at(0).get<double>();
                c.layout.height_max = l.at("height_range").at(1).get<double>();
            }
            c.layout.side_column_prob =
                l.value("side_column_prob", c.layout.side_column_prob);
            c.layout.item_gap = l.value("item_gap", c.layout.item_gap);
        }
        const json& r = j.at("ratings");
        c.ratings.d_raters = r.at("d_raters").get<int>();
        c.ratings.r_raters = r.at("r_raters").get<int>();
        for (const json& t : r.at("tiers"))
            c.ratings.tiers.push_back(
                RatingTier{t.at("d_probs").get<std::vector<double>>(),
                           t.at("r_probs").get<std::vector<double>>()});
        c.ratings.tier_weights = r.at("tier_weights").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw Error(std::string("invalid simulator config: ") + e.what());
    }
    return c;
}

SimConfig load_sim_config(const std::string& path) {
    return sim_config_from_json(load_json(path));
}

json fit_result_to_json(const FitResult& r) {
    return json{{"final_objective", r.final_objective},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"grad_sup_norm", r.grad_sup_norm},
                {"per_term_loglik",
                 {{"mouse", r.per_term_loglik.mouse},
                  {"click", r.per_term_loglik.click},
                  {"satisfaction", r.per_term_loglik.satisfaction}}},
                {"params", r.params}};
}

json eval_report_to_json(const EvalReport& r, const std::string& manifest_ref) {
    json models = json::array();
    for (size_t i = 0; i < r.model_names.size(); ++i)
        models.push_back(json{{"name", r.model_names[i]},
                              {"external", r.model_external[i]}});

    json aggregates = json::object();
    for (const auto& [name, a] : r.aggregates) {
        aggregates[name] = json{
            {"click_loglik_mean", opt_json(a.click_loglik_mean)},
            {"click_loglik_std", opt_json(a.click_loglik_std)},
            {"sat_loglik_mean", opt_json(a.sat_loglik_mean)},
            {"sat_loglik_std", opt_json(a.sat_loglik_std)},
            {"pearson_vs_sat_mean", opt_json(a.pearson_vs_sat_mean)},
            {"pearson_vs_sat_std", opt_json(a.pearson_vs_sat_std)},
            {"spearman_vs_sat_mean", opt_json(a.spearman_vs_sat_mean)},
            {"spearman_vs_sat_std", opt_json(a.spearman_vs_sat_std)}};
    }

    json pairwise = json::object();
    for (size_t i = 0; i < r.model_names.size(); ++i) {
        json row = json::object();
        for (size_t j2 = 0; j2 < r.model_names.size(); ++j2)
            row[r.model_names[j2]] = opt_json(r.pairwise_utility_pearson[i][j2]);
        pairwise[r.model_names[i]] = std::move(row);
    }

    json folds = json::array();
    for (const FoldReport& f : r.folds) {
        json fm = json::array();
        for (const ModelFoldReport& m : f.models) {
            fm.push_back(json{{"name", m.model},
                              {"click_loglik", opt_json(m.click_loglik)},
                              {"sat_loglik", opt_json(m.sat_loglik)},
                              {"pearson_vs_sat", opt_json(m.pearson_vs_sat)},
                              {"spearman_vs_sat", opt_json(m.spearman_vs_sat)},
                              {"utilities", m.utilities}});
        }
        folds.push_back(json{{"repetition", f.repetition},
                             {"fold", f.fold},
                             {"train_size", f.train_size},
                             {"test_size", f.test_size},
                             {"train_checksum", checksum_hex(f.train_checksum)},
                             {"test_checksum", checksum_hex(f.test_checksum)},
                             {"models", std::move(fm)}});
    }

    json out{{"schema_version", kReportSchemaVersion},
             {"T", r.T},
             {"Q", r.Q},
             {"seed", r.seed},
             {"models", std::move(models)},
             {"aggregates", std::move(aggregates)},
             {"pairwise_utility_pearson", std::move(pairwise)},
             {"folds", std::move(folds)}};
    if (!manifest_ref.empty()) out["manifest_ref"] = manifest_ref;
    return out;
}

json hetero_report_to_json(const HeteroReport& r) {
    json per_model = json::object();
    for (const auto& name : r.model_names) {
        per_model[name] =
            json{{"utilities", r.utilities.at(name)},
                 {"pearson_vs_sat", opt_json(r.pearson_vs_sat.at(name))}};
    }
    return json{{"n_repeats", r.n_repeats},
                {"labels", r.labels},
                {"per_model", std::move(per_model)}};
}

json agreement_report_to_json(const AgreementReport& r) {
    json per_kind = json::object();
    for (const auto& [kind, st] : r.per_kind) {
        per_kind[label_kind_name(kind)] =
            json{{"workers_total", st.workers_total},
                 {"workers_removed", st.workers_removed},
                 {"pct_workers_removed",
                  st.workers_total
                      ? 100.0 * static_cast<double>(st.workers_removed) /
                            static_cast<double>(st.workers_total)
                      : 0.0},
                 {"ratings_total", st.ratings_total},
                 {"ratings_removed", st.ratings_removed},
                 {"pct_ratings_removed",
                  st.ratings_total
                      ? 100.0 * static_cast<double>(st.ratings_removed) /
                            static_cast<double>(st.ratings_total)
                      : 0.0},
                 {"cohen_kappa", opt_json(st.kappa)},
                 {"krippendorff_alpha", opt_json(st.alpha)}};
    }
    json removed = json::array();
    for (const RemovedWorker& w : r.filter.removed)
        removed.push_back(json{{"worker_id", w.worker_id},
                               {"reasons", w.reasons},
                               {"n_ratings", w.n_ratings}});
    return json{{"per_kind", std::move(per_kind)},
                {"removed_workers", std::move(removed)},
                {"kept_ratings", r.filter.kept.size()}};
}

namespace {

std::string csv_num(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    return buf;
}

}  // namespace

void write_eval_report_csv(const std::string& path, const EvalReport& r) {
    std::ofstream out = open_out(path);
    out << "schema_version,repetition,fold,model,external,test_size,"
           "click_loglik,sat_loglik,pearson_vs_sat,spearman_vs_sat\n";
    for (const FoldReport& f : r.folds) {
        for (size_t mi = 0; mi < f.models.size(); ++mi) {
            const ModelFoldReport& m = f.models[mi];
            out << kReportSchemaVersion << "," << f.repetition << "," << f.fold
                << "," << m.model << "," << (m.external ? 1 : 0) << ","
                << f.test_size << "," << csv_num(m.click_loglik) << ","
                << csv_num(m.sat_loglik) << "," << csv_num(m.pearson_vs_sat)
                << "," << csv_num(m.spearman_vs_sat) << "\n";
        }
    }
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

}  // namespace cas
