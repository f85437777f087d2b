// cas: command-line front end for the CAS model toolkit.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "cas/json_io.hpp"
#include "cas/manifest.hpp"

namespace {

using nlohmann::json;

std::string basename_no_ext(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

void validate_or_throw(const std::vector<cas::Session>& sessions,
                       const std::string& path) {
    if (sessions.empty()) throw cas::Error("no sessions in " + path);
    for (const cas::Session& s : sessions) {
        const auto violations = cas::validate_session(s);
        if (!violations.empty())
            throw cas::Error(path + ": session '" + s.session_id +
                             "': " + violations.front());
    }
}

cas::RunManifest make_manifest(const std::string& command,
                               const std::map<std::string, std::string>& flags,
                               const std::vector<std::string>& inputs,
                               std::vector<uint64_t> seeds) {
    cas::RunManifest m;
    m.command = command;
    m.flags = flags;
    for (const std::string& path : inputs)
        m.input_checksums[path] = cas::checksum_hex(cas::file_checksum(path));
    m.seeds = std::move(seeds);
    m.timestamp = cas::RunManifest::now_iso8601();
    return m;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string sessions_path, out_path;
    std::string variant = "CAS";
    double lambda = -1.0;  // <0 = preset default
    int max_iters = 500;
    double tol = 1e-6;
    uint64_t seed = 0;
    double init_scale = 0.0;
    int threads = 1;
    bool no_rank = false, no_classes = false, no_geometry = false;
    bool no_d_labels = false, no_sat_term = false;
};

void cmd_train(const TrainArgs& a) {
    auto sessions = cas::read_sessions_jsonl(a.sessions_path);
    validate_or_throw(sessions, a.sessions_path);

    cas::TrainConfig config;
    config.variant = cas::ModelVariant::preset(a.variant);
    if (a.lambda >= 0) config.variant.reg_lambda = a.lambda;
    if (a.no_rank) config.variant.use_rank = false;
    if (a.no_classes) config.variant.use_classes = false;
    if (a.no_geometry) config.variant.use_geometry = false;
    if (a.no_d_labels) config.variant.use_d_labels = false;
    if (a.no_sat_term) config.variant.use_sat_term = false;
    if (!config.variant.use_rank && !config.variant.use_classes &&
        !config.variant.use_geometry)
        throw cas::Error("at least one feature group must stay enabled");
    config.max_iterations = a.max_iters;
    config.grad_tolerance = a.tol;
    config.seed = a.seed;
    config.init_scale = a.init_scale;
    config.threads = a.threads;

    const cas::FitResult fr = cas::fit(sessions, config);

    const std::string manifest_path = a.out_path + ".manifest.json";
    cas::save_model(a.out_path, fr.model(config.variant), manifest_path);
    cas::save_json(a.out_path + ".fit.json", cas::fit_result_to_json(fr));
    cas::save_manifest(
        manifest_path,
        make_manifest("train",
                      {{"sessions", a.sessions_path},
                       {"variant", a.variant},
                       {"lambda", std::to_string(config.variant.reg_lambda)},
                       {"max_iters", std::to_string(a.max_iters)},
                       {"tol", std::to_string(a.tol)},
                       {"init_scale", std::to_string(a.init_scale)},
                       {"threads", std::to_string(a.threads)},
                       {"out", a.out_path}},
                      {a.sessions_path}, {a.seed}));

    std::printf("trained %s on %zu sessions\n", a.variant.c_str(),
                sessions.size());
    std::printf("  objective     %.6f  (%d iterations, %s)\n",
                fr.final_objective, fr.iterations,
                fr.converged ? "converged" : "not converged");
    std::printf("  loglik mouse  %.6f\n", fr.per_term_loglik.mouse);
    std::printf("  loglik click  %.6f\n", fr.per_term_loglik.click);
    std::printf("  loglik sat    %.6f\n", fr.per_term_loglik.satisfaction);
    std::printf("model written to %s\n", a.out_path.c_str());
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string sessions_path, out_prefix;
    std::vector<std::string> model_paths;
    bool conditioned = false;
};

void cmd_eval(const EvalArgs& a) {
    auto sessions = cas::read_sessions_jsonl(a.sessions_path);
    validate_or_throw(sessions, a.sessions_path);

    std::vector<std::unique_ptr<cas::EvalModel>> models;
    std::map<std::string, int> name_count;
    for (const std::string& path : a.model_paths) {
        std::string name = basename_no_ext(path);
        if (++name_count[name] > 1)
            name += "#" + std::to_string(name_count[name]);
        models.push_back(
            cas::make_eval_model(name, cas::load_model(path), a.conditioned));
    }

    cas::EvalReport report;
    report.T = 1;
    report.Q = 1;
    cas::FoldReport fold;
    fold.test_size = sessions.size();
    fold.test_checksum = cas::sessions_checksum(sessions);
    fold.models = cas::default_fold_eval(models, sessions);
    for (const auto& m : fold.models) {
        report.model_names.push_back(m.model);
        report.model_external.push_back(m.external);
    }
    report.folds.push_back(std::move(fold));
    cas::finalize_report(report);

    const std::string manifest_path = a.out_prefix + ".manifest.json";
    std::vector<std::string> inputs = {a.sessions_path};
    inputs.insert(inputs.end(), a.model_paths.begin(), a.model_paths.end());
    cas::save_json(a.out_prefix + ".json",
                   cas::eval_report_to_json(report, manifest_path));
    cas::write_eval_report_csv(a.out_prefix + ".csv", report);
    cas::save_manifest(manifest_path,
                       make_manifest("eval",
                                     {{"sessions", a.sessions_path},
                                      {"conditioned_eval",
                                       a.conditioned ? "true" : "false"},
                                      {"out", a.out_prefix}},
                                     inputs, {}));

    for (const auto& m : report.folds[0].models) {
        std::printf("%-12s click_loglik %-12s sat_loglik %s\n", m.model.c_str(),
                    m.click_loglik ? std::to_string(*m.click_loglik).c_str()
                                   : "n/a",
                    m.sat_loglik ? std::to_string(*m.sat_loglik).c_str() : "n/a");
    }
    std::printf("report written to %s.json / %s.csv\n", a.out_prefix.c_str(),
                a.out_prefix.c_str());
}

// ---------------------------------------------------------------------------

struct XvalArgs {
    std::string sessions_path, out_prefix, ubm_params_path;
    std::vector<std::string> variants;
    std::vector<std::string> baselines;
    int T = 5, Q = 5;
    uint64_t seed = 1;
    double lambda = -1.0;
    int depth = 10;
    int threads = 1;
    int hetero_repeats = 0;
    bool pin_calibration = false;
};

void cmd_xval(const XvalArgs& a) {
    auto sessions = cas::read_sessions_jsonl(a.sessions_path);
    validate_or_throw(sessions, a.sessions_path);

    std::vector<cas::ModelSpec> specs;
    cas::TrainConfig base;
    base.threads = a.threads;
    for (const std::string& v : a.variants) {
        cas::ModelSpec spec = cas::ModelSpec::cas(v, base);
        if (a.lambda >= 0 && v != "CASnoreg")
            spec.train.variant.reg_lambda = a.lambda;
        specs.push_back(std::move(spec));
    }
    for (const std::string& b : a.baselines) {
        cas::ModelSpec spec = cas::ModelSpec::baseline(b);
        spec.dcg_depth = a.depth;
        spec.pin_calibration = a.pin_calibration;
        specs.push_back(std::move(spec));
    }
    if (!a.ubm_params_path.empty()) {
        cas::ModelSpec spec;
        spec.kind = cas::ModelSpec::Kind::ExternalUbm;
        spec.name = "uUBM";
        spec.external_params = cas::load_ubm_params(a.ubm_params_path);
        spec.pin_calibration = a.pin_calibration;
        specs.push_back(std::move(spec));
    }
    if (specs.empty())
        throw cas::Error("nothing to evaluate: pass --variant and/or --baseline");

    const cas::TrainFn train_fn = [&](std::span<const cas::Session> train) {
        return cas::fit_models(specs, train);
    };

    cas::EvalReport report =
        cas::tq_fold(sessions, a.T, a.Q, a.seed, train_fn);

    const std::string manifest_path = a.out_prefix + ".manifest.json";
    json report_json = cas::eval_report_to_json(report, manifest_path);
    if (a.hetero_repeats > 0) {
        const cas::HeteroReport hr = cas::heterogeneous_holdout(
            sessions, a.hetero_repeats, a.seed, train_fn);
        report_json["hetero_holdout"] = cas::hetero_report_to_json(hr);
    }
    std::vector<std::string> inputs = {a.sessions_path};
    if (!a.ubm_params_path.empty()) inputs.push_back(a.ubm_params_path);
    cas::save_json(a.out_prefix + ".json", report_json);
    cas::write_eval_report_csv(a.out_prefix + ".csv", report);
    cas::save_manifest(
        manifest_path,
        make_manifest("xval",
                      {{"sessions", a.sessions_path},
                       {"T", std::to_string(a.T)},
                       {"Q", std::to_string(a.Q)},
                       {"lambda", std::to_string(a.lambda)},
                       {"depth", std::to_string(a.depth)},
                       {"hetero_repeats", std::to_string(a.hetero_repeats)},
                       {"pin_calibration", a.pin_calibration ? "true" : "false"},
                       {"out", a.out_prefix}},
                      inputs, {a.seed}));

    std::printf("%d x %d cross-validation on %zu sessions (%zu outcomes)\n",
                a.T, a.Q, sessions.size(), report.folds.size());
    for (const auto& [name, agg] : report.aggregates) {
        std::printf("  %-12s", name.c_str());
        if (agg.click_loglik_mean)
            std::printf(" click_ll %8.4f", *agg.click_loglik_mean);
        if (agg.sat_loglik_mean)
            std::printf(" sat_ll %8.4f", *agg.sat_loglik_mean);
        if (agg.pearson_vs_sat_mean)
            std::printf(" pearson_vs_sat %7.4f", *agg.pearson_vs_sat_mean);
        std::printf("\n");
    }
    std::printf("report written to %s.json / %s.csv\n", a.out_prefix.c_str(),
                a.out_prefix.c_str());
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config_path, out_path, dump_default_path;
    int n_override = 0;
    bool has_n_override = false;
    uint64_t seed_override = 0;
    bool has_seed_override = false;
};

void cmd_simulate(const SimulateArgs& a) {
    if (!a.dump_default_path.empty()) {
        cas::SimConfig c = cas::SimConfig::defaults(1000, 1);
        cas::save_json(a.dump_default_path, cas::sim_config_to_json(c));
        std::printf("default simulator config written to %s\n",
                    a.dump_default_path.c_str());
        if (a.out_path.empty()) return;
    }
    if (a.out_path.empty()) throw cas::Error("simulate: --out is required");
    cas::SimConfig config = a.config_path.empty()
                                ? cas::SimConfig::defaults(1000, 1)
                                : cas::load_sim_config(a.config_path);
    if (a.has_n_override) config.n_sessions = a.n_override;
    if (a.has_seed_override) config.seed = a.seed_override;

    const cas::SimOutput out = cas::simulate(config);
    const std::string truth_path = a.out_path + ".truth.jsonl";
    const std::string manifest_path = a.out_path + ".manifest.json";
    cas::write_sessions_jsonl(a.out_path, out.sessions);
    cas::write_truth_jsonl(truth_path, out.truth);
    std::vector<std::string> inputs;
    if (!a.config_path.empty()) inputs.push_back(a.config_path);
    cas::save_manifest(
        manifest_path,
        make_manifest("simulate",
                      {{"config", a.config_path},
                       {"n_sessions", std::to_string(config.n_sessions)},
                       {"out", a.out_path}},
                      inputs, {config.seed}));

    // summary: click-through and fixation rate by position, satisfaction rate
    const size_t depth = static_cast<size_t>(config.items_per_serp);
    std::vector<size_t> clicks(depth, 0), fixes(depth, 0), counts(depth, 0);
    size_t satisfied = 0;
    for (const cas::Session& s : out.sessions) {
        for (size_t k = 0; k < s.items.size() && k < depth; ++k) {
            ++counts[k];
            clicks[k] += s.items[k].clicked ? 1 : 0;
            fixes[k] += s.items[k].mouse_fixated ? 1 : 0;
        }
        satisfied += (s.satisfaction && *s.satisfaction) ? 1 : 0;
    }
    std::printf("simulated %zu sessions (%d items each) -> %s\n",
                out.sessions.size(), config.items_per_serp, a.out_path.c_str());
    std::printf("rank    ctr     fixation\n");
    for (size_t k = 0; k < depth; ++k) {
        if (!counts[k]) continue;
        std::printf("%4zu  %.4f   %.4f\n", k + 1,
                    static_cast<double>(clicks[k]) / static_cast<double>(counts[k]),
                    static_cast<double>(fixes[k]) / static_cast<double>(counts[k]));
    }
    std::printf("satisfaction rate %.4f\n",
                static_cast<double>(satisfied) /
                    static_cast<double>(out.sessions.size()));
}

// ---------------------------------------------------------------------------

struct MetricArgs {
    std::string model_path, serp_path;
};

void cmd_metric(const MetricArgs& a) {
    const cas::AnyModel any = cas::load_model(a.model_path);
    const json j = cas::load_json(a.serp_path);

    // accept either a full session object or a bare {"items": [...]}
    std::vector<cas::SerpItem> items;
    if (j.contains("items"))
        items = j.at("items").get<std::vector<cas::SerpItem>>();
    else
        items = j.get<std::vector<cas::SerpItem>>();
    if (items.empty()) throw cas::Error("metric: SERP has no items");

    bool behavioral = j.contains("satisfaction");
    if (j.contains("items"))
        for (const json& it : j.at("items"))
            if (it.value("clicked", false) || it.value("mouse_fixated", false))
                behavioral = true;
    if (behavioral)
        std::fprintf(stderr,
                     "notice: behavioral fields present in %s are ignored; the "
                     "metric uses ratings and layout only\n",
                     a.serp_path.c_str());

    double utility = 0.0;
    if (const auto* m = std::get_if<cas::CasModel>(&any)) {
        utility = cas::metric_utility(items, *m);
    } else {
        cas::Session s;
        s.session_id = "metric";
        s.items = items;
        utility = cas::make_eval_model("m", any)->utility(s);
    }
    std::printf("%.10g\n", utility);
}

// ---------------------------------------------------------------------------

struct AgreementArgs {
    std::string ratings_path, out_prefix;
    int min_ratings = 3;
    bool require_quote = false;
    double disagreement_threshold = -1.0;
    bool has_threshold = false;
    std::string alpha_metric = "nominal";
};

void cmd_agreement(const AgreementArgs& a) {
    const auto records = cas::read_ratings_jsonl(a.ratings_path);
    if (records.empty()) throw cas::Error("no ratings in " + a.ratings_path);

    cas::SpamPolicy policy;
    policy.min_ratings = a.min_ratings;
    policy.require_quote = a.require_quote;
    if (a.has_threshold) policy.disagreement_threshold = a.disagreement_threshold;

    cas::AlphaMetric metric;
    if (a.alpha_metric == "nominal")
        metric = cas::AlphaMetric::Nominal;
    else if (a.alpha_metric == "ordinal")
        metric = cas::AlphaMetric::Ordinal;
    else
        throw cas::Error("--alpha-metric must be nominal or ordinal");

    const cas::AgreementReport report =
        cas::agreement_report(records, policy, metric);

    const std::string manifest_path = a.out_prefix + ".manifest.json";
    json report_json = cas::agreement_report_to_json(report);
    report_json["manifest_ref"] = manifest_path;
    cas::save_json(a.out_prefix + ".report.json", report_json);
    cas::write_ratings_jsonl(a.out_prefix + ".kept.jsonl", report.filter.kept);

    json hist_json = json::object();
    for (const auto& [item, h] : cas::aggregate_histograms(report.filter.kept))
        hist_json[item] = json{{"d_ratings", h.d}, {"r_ratings", h.r}};
    cas::save_json(a.out_prefix + ".histograms.json", hist_json);

    cas::save_manifest(
        manifest_path,
        make_manifest(
            "agreement",
            {{"ratings", a.ratings_path},
             {"min_ratings", std::to_string(a.min_ratings)},
             {"require_quote", a.require_quote ? "true" : "false"},
             {"disagreement_threshold",
              a.has_threshold ? std::to_string(a.disagreement_threshold) : "none"},
             {"alpha_metric", a.alpha_metric},
             {"out", a.out_prefix}},
            {a.ratings_path}, {}));

    std::printf("label  %%workers_removed  %%ratings_removed  kappa    alpha\n");
    for (const auto& [kind, st] : report.per_kind) {
        const double pw = st.workers_total ? 100.0 * st.workers_removed /
                                                 static_cast<double>(st.workers_total)
                                           : 0.0;
        const double pr = st.ratings_total ? 100.0 * st.ratings_removed /
                                                 static_cast<double>(st.ratings_total)
                                           : 0.0;
        std::printf("(%s)    %15.1f%%  %15.1f%%  %-7s  %s\n",
                    cas::label_kind_name(kind), pw, pr,
                    st.kappa ? std::to_string(*st.kappa).substr(0, 6).c_str()
                             : "n/a",
                    st.alpha ? std::to_string(*st.alpha).substr(0, 6).c_str()
                             : "n/a");
    }
    std::printf("outputs written to %s.{report.json,kept.jsonl,histograms.json}\n",
                a.out_prefix.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAS (clicks, attention, satisfaction) SERP model toolkit"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "fit a CAS variant on session logs");
    train->add_option("--sessions", train_args.sessions_path, "sessions JSONL")
        ->required();
    train->add_option("--variant", train_args.variant,
                      "CAS, CASnod, CASnosat, CASnoreg, CASrank, CASnogeom, "
                      "CASnoclass");
    train->add_option("--lambda", train_args.lambda, "L2 strength override");
    train->add_option("--max-iters", train_args.max_iters, "L-BFGS iteration cap");
    train->add_option("--tol", train_args.tol, "gradient sup-norm tolerance");
    train->add_option("--seed", train_args.seed, "init seed (with --init-scale)");
    train->add_option("--init-scale", train_args.init_scale,
                      "uniform init half-width; 0 = zero init");
    train->add_option("--threads", train_args.threads, "evaluation threads");
    train->add_flag("--no-rank", train_args.no_rank, "drop the rank feature");
    train->add_flag("--no-classes", train_args.no_classes, "drop class features");
    train->add_flag("--no-geometry", train_args.no_geometry,
                    "drop geometry features");
    train->add_flag("--no-d-labels", train_args.no_d_labels, "drop D labels");
    train->add_flag("--no-sat-term", train_args.no_sat_term,
                    "drop the satisfaction objective term");
    train->add_option("--out", train_args.out_path, "model file to write")
        ->required();
    train->callback([&] { cmd_train(train_args); });

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "evaluate model files on sessions");
    eval->add_option("--sessions", eval_args.sessions_path, "sessions JSONL")
        ->required();
    eval->add_option("--model", eval_args.model_paths, "model file (repeatable)")
        ->required();
    eval->add_flag("--conditioned-eval", eval_args.conditioned,
                   "condition CAS click/sat predictions on observed fixations");
    eval->add_option("--out", eval_args.out_prefix, "report prefix")->required();
    eval->callback([&] { cmd_eval(eval_args); });

    XvalArgs xval_args;
    auto* xval = app.add_subcommand(
        "xval", "TQ-fold cross-validation with per-fold refitting");
    xval->add_option("--sessions", xval_args.sessions_path, "sessions JSONL")
        ->required();
    xval->add_option("--T", xval_args.T, "repetitions");
    xval->add_option("--Q", xval_args.Q, "folds per repetition");
    xval->add_option("--seed", xval_args.seed, "shuffle seed");
    xval->add_option("--variant", xval_args.variants,
                     "CAS variant to train per fold (repeatable)");
    xval->add_option("--baseline", xval_args.baselines,
                     "baseline to fit per fold: pbm, ubm, random, dcg");
    xval->add_option("--ubm-params", xval_args.ubm_params_path,
                     "externally trained UBM parameter file (uUBM)");
    xval->add_option("--lambda", xval_args.lambda,
                     "L2 override for CAS variants (except CASnoreg)");
    xval->add_option("--depth", xval_args.depth, "DCG depth");
    xval->add_option("--threads", xval_args.threads, "training threads");
    xval->add_option("--hetero-repeats", xval_args.hetero_repeats,
                     "also run the heterogeneous holdout this many times");
    xval->add_flag("--pin-calibration", xval_args.pin_calibration,
                   "pin baseline satisfaction intercepts to 0");
    xval->add_option("--out", xval_args.out_prefix, "report prefix")->required();
    xval->callback([&] { cmd_xval(xval_args); });

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate",
                                   "generate sessions from a known CAS process");
    sim->add_option("--config", sim_args.config_path, "simulator config JSON");
    sim->add_option("--out", sim_args.out_path, "sessions JSONL to write");
    sim->add_option("--n", sim_args.n_override, "override n_sessions")
        ->each([&](const std::string&) { sim_args.has_n_override = true; });
    sim->add_option("--seed", sim_args.seed_override, "override seed")
        ->each([&](const std::string&) { sim_args.has_seed_override = true; });
    sim->add_option("--write-default-config", sim_args.dump_default_path,
                    "write the default config JSON and exit");
    sim->callback([&] { cmd_simulate(sim_args); });

    MetricArgs metric_args;
    auto* metric = app.add_subcommand(
        "metric", "score a SERP (ratings + layout) with a trained model");
    metric->add_option("--model", metric_args.model_path, "model file")
        ->required();
    metric->add_option("--serp", metric_args.serp_path,
                       "SERP JSON (session object or {\"items\": [...]})")
        ->required();
    metric->callback([&] { cmd_metric(metric_args); });

    AgreementArgs agr_args;
    auto* agr = app.add_subcommand(
        "agreement", "rater agreement statistics and spammer filtering");
    agr->add_option("--ratings", agr_args.ratings_path, "ratings JSONL")
        ->required();
    agr->add_option("--min-ratings", agr_args.min_ratings,
                    "drop workers with fewer ratings");
    agr->add_flag("--require-quote", agr_args.require_quote,
                  "drop workers whose justification is not quoted from source");
    agr->add_option("--disagreement-threshold", agr_args.disagreement_threshold,
                    "drop workers with mean pairwise kappa below this")
        ->each([&](const std::string&) { agr_args.has_threshold = true; });
    agr->add_option("--alpha-metric", agr_args.alpha_metric,
                    "nominal or ordinal");
    agr->add_option("--out", agr_args.out_prefix, "output prefix")->required();
    agr->callback([&] { cmd_agreement(agr_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0)
            std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
