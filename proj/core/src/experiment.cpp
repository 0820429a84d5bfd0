#include "fedscore/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "fedscore/csv.hpp"
#include "fedscore/errors.hpp"
#include "fedscore/plot.hpp"

namespace fedscore {

namespace {

// The 10-site cohort proportions used when a federation block is omitted.
const std::vector<double> kDefaultProportions = {0.04, 0.05, 0.07, 0.09, 0.10,
                                                 0.11, 0.12, 0.13, 0.14, 0.15};

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
    const bool has_csv = !csv_path.empty();
    const bool has_synth = synthetic.has_value();
    if (has_csv == has_synth)
        throw ConfigError("experiment: exactly one of csv or synthetic input is required");
    if (has_csv && schema_path.empty())
        throw ConfigError("experiment: csv input requires a schema path");
    if (has_synth) {
        if (n == 0) throw ConfigError("experiment: synthetic n must be positive");
        if (beta_true.size() != synthetic->encoded_width())
            throw ConfigError("experiment: beta_true length must be " +
                              std::to_string(synthetic->encoded_width()) +
                              " (intercept + encoded features)");
    }
    federation.validate();
    pipeline.validate();
    if (!lead_largest && pipeline.lead_index >= static_cast<std::size_t>(federation.sites))
        throw ConfigError("experiment: lead index out of range");
}

Json ExperimentConfig::to_json() const {
    Json j;
    j["format_version"] = 1;
    j["seed"] = seed;
    if (!out_dir.empty()) j["output"] = out_dir;
    if (!csv_path.empty()) {
        j["csv"] = Json{{"path", csv_path}, {"schema", schema_path}};
    } else if (synthetic) {
        Json s;
        s["n"] = n;
        s["beta"] = beta_true;
        s["plan"] = synthetic->to_json();
        j["synthetic"] = std::move(s);
    }
    Json fed;
    fed["sites"] = federation.sites;
    fed["proportions"] = federation.proportions;
    switch (federation.weights_mode) {
        case FederationConfig::WeightsMode::Equal: fed["weights"] = "equal"; break;
        case FederationConfig::WeightsMode::SampleSize: fed["weights"] = "sample_size"; break;
        case FederationConfig::WeightsMode::Custom: fed["weights"] = federation.custom_weights;
    }
    fed["split"] = federation.split_ratios;
    j["federation"] = std::move(fed);
    j["binning"] = Json{{"percentiles", pipeline.binning.percentiles},
                        {"max_categories", pipeline.binning.max_categories},
                        {"share_grid", pipeline.binning.share_grid}};
    j["forest"] = Json{{"trees", pipeline.forest.n_trees},
                       {"min_leaf", pipeline.forest.min_leaf},
                       {"mtry", pipeline.forest.mtry}};
    j["fit"] = Json{{"tol", pipeline.fit.tol}, {"max_iter", pipeline.fit.max_iter}};
    j["selection"] = Json{{"d_max", pipeline.d_max},
                          {"epsilon", pipeline.epsilon},
                          {"forced", pipeline.forced}};
    j["s_max"] = pipeline.s_max;
    if (lead_largest)
        j["lead"] = "largest";
    else
        j["lead"] = pipeline.lead_index;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    static const std::set<std::string> known = {
        "format_version", "seed",   "output",    "csv",       "synthetic", "federation",
        "binning",        "forest", "fit",       "selection", "s_max",     "lead"};
    if (!j.is_object()) throw ConfigError("experiment config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key))
            throw ConfigError("experiment config: unknown key '" + key + "'");
    }

    ExperimentConfig cfg;
    try {
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("output")) cfg.out_dir = j["output"].get<std::string>();

        if (j.contains("csv")) {
            cfg.csv_path = j["csv"].at("path").get<std::string>();
            cfg.schema_path = j["csv"].at("schema").get<std::string>();
        }
        if (j.contains("synthetic")) {
            const Json& s = j["synthetic"];
            cfg.n = s.at("n").get<std::size_t>();
            cfg.beta_true = s.at("beta").get<std::vector<double>>();
            cfg.synthetic = SyntheticPlan::from_json(s.at("plan"));
        }

        if (j.contains("federation")) {
            const Json& f = j["federation"];
            if (f.contains("sites")) cfg.federation.sites = f["sites"].get<int>();
            if (f.contains("proportions"))
                cfg.federation.proportions = f["proportions"].get<std::vector<double>>();
            else
                cfg.federation.proportions.assign(
                    static_cast<std::size_t>(cfg.federation.sites),
                    1.0 / static_cast<double>(cfg.federation.sites));
            if (f.contains("weights")) {
                const Json& w = f["weights"];
                if (w.is_array()) {
                    cfg.federation.weights_mode = FederationConfig::WeightsMode::Custom;
                    cfg.federation.custom_weights = w.get<std::vector<double>>();
                } else if (w.get<std::string>() == "equal") {
                    cfg.federation.weights_mode = FederationConfig::WeightsMode::Equal;
                } else if (w.get<std::string>() == "sample_size") {
                    cfg.federation.weights_mode = FederationConfig::WeightsMode::SampleSize;
                } else {
                    throw ConfigError("experiment config: weights must be equal, "
                                      "sample_size, or an array");
                }
            }
            if (f.contains("split")) {
                auto ratios = f["split"].get<std::vector<double>>();
                if (ratios.size() != 3)
                    throw ConfigError("experiment config: split must have 3 ratios");
                std::copy(ratios.begin(), ratios.end(), cfg.federation.split_ratios.begin());
            }
        } else {
            cfg.federation.sites = static_cast<int>(kDefaultProportions.size());
            cfg.federation.proportions = kDefaultProportions;
        }

        if (j.contains("binning")) {
            const Json& b = j["binning"];
            if (b.contains("percentiles")) {
                auto ps = b["percentiles"].get<std::vector<double>>();
                if (ps.size() != cfg.pipeline.binning.percentiles.size())
                    throw ConfigError("experiment config: exactly 4 percentiles expected");
                std::copy(ps.begin(), ps.end(), cfg.pipeline.binning.percentiles.begin());
            }
            if (b.contains("max_categories"))
                cfg.pipeline.binning.max_categories = b["max_categories"].get<int>();
            if (b.contains("share_grid"))
                cfg.pipeline.binning.share_grid = b["share_grid"].get<double>();
        }
        if (j.contains("forest")) {
            const Json& f = j["forest"];
            if (f.contains("trees")) cfg.pipeline.forest.n_trees = f["trees"].get<int>();
            if (f.contains("min_leaf")) cfg.pipeline.forest.min_leaf = f["min_leaf"].get<int>();
            if (f.contains("mtry")) cfg.pipeline.forest.mtry = f["mtry"].get<int>();
        }
        if (j.contains("fit")) {
            const Json& f = j["fit"];
            if (f.contains("tol")) cfg.pipeline.fit.tol = f["tol"].get<double>();
            if (f.contains("max_iter")) cfg.pipeline.fit.max_iter = f["max_iter"].get<int>();
        }
        if (j.contains("selection")) {
            const Json& s = j["selection"];
            if (s.contains("d_max")) cfg.pipeline.d_max = s["d_max"].get<int>();
            if (s.contains("epsilon")) cfg.pipeline.epsilon = s["epsilon"].get<double>();
            if (s.contains("forced"))
                cfg.pipeline.forced = s["forced"].get<std::vector<std::string>>();
        }
        if (j.contains("s_max")) cfg.pipeline.s_max = j["s_max"].get<int>();
        if (j.contains("lead")) {
            if (j["lead"].is_string()) {
                if (j["lead"].get<std::string>() != "largest")
                    throw ConfigError("experiment config: lead must be an index or \"largest\"");
                cfg.lead_largest = true;
            } else {
                cfg.pipeline.lead_index = j["lead"].get<std::size_t>();
            }
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    cfg.federation.seed = cfg.seed;
    cfg.pipeline.seed = cfg.seed;
    return cfg;
}

ExperimentConfig ExperimentConfig::load_file(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

PreparedData prepare_data(const ExperimentConfig& config) {
    config.validate();
    PreparedData prep;

    SiteDataset all;
    if (config.synthetic) {
        Eigen::VectorXd beta(static_cast<Eigen::Index>(config.beta_true.size()));
        for (std::size_t i = 0; i < config.beta_true.size(); ++i)
            beta[static_cast<Eigen::Index>(i)] = config.beta_true[i];
        all = generate_synthetic(config.n, beta, *config.synthetic, config.seed);
        prep.schema = all.schema;
        prep.load_report.rows_loaded = all.n_rows();
    } else {
        prep.schema = Schema::load_file(config.schema_path);
        all = load_csv(config.csv_path, prep.schema, &prep.load_report);
    }

    FederationConfig fed = config.federation;
    fed.seed = config.seed;
    prep.sites = partition_sites(all, fed);

    for (auto& site : prep.sites) {
        // CSV rows may arrive pre-tagged; only untagged cohorts get split.
        if (site.count(Split::Train) == site.n_rows())
            site = split_train_valid_test(std::move(site), fed.split_ratios, config.seed);
    }

    std::vector<std::size_t> sizes;
    for (const auto& site : prep.sites) sizes.push_back(site.n_rows());
    prep.weights = site_weights(fed, sizes);
    return prep;
}

void audit_transcript(const Transcript& transcript, std::size_t n_sites) {
    if (transcript.count("broadcast") != 1)
        throw DataError("transcript audit: expected exactly one broadcast");
    if (transcript.count("reply") != n_sites - 1)
        throw DataError("transcript audit: expected one reply per remote site");
    if (transcript.count("lead_summary") != 1)
        throw DataError("transcript audit: expected one lead summary");
    if (transcript.entries.size() != n_sites + 1)
        throw DataError("transcript audit: unexpected extra entries");
    if (transcript.entries.front().type != "broadcast")
        throw DataError("transcript audit: broadcast must come first");

    const BroadcastPacket packet = parse_broadcast(transcript.entries.front().payload);
    const auto p = static_cast<Eigen::Index>(packet.encoding.width());

    std::set<int> reply_ids;
    std::size_t reply_bytes = 0;
    for (const auto& entry : transcript.entries) {
        if (entry.type == "broadcast") continue;
        const Json j = Json::parse(entry.payload);
        if (j.size() != 4 || !j.contains("site_id") || !j.contains("n") ||
            !j.contains("grad") || !j.contains("hess"))
            throw DataError("transcript audit: site message carries unexpected fields");
        const SiteMessage m = parse_site_message(entry.payload);
        if (m.grad.size() != p || m.hess.rows() != p || m.hess.cols() != p)
            throw DataError("transcript audit: payload dimensions disagree with encoding");
        if (entry.type == "reply") {
            if (!reply_ids.insert(m.site_id).second)
                throw DataError("transcript audit: duplicate reply from site " +
                                std::to_string(m.site_id));
            // Fixed-width wire reals make every reply the same size; any
            // deviation means row-scale information leaked into a payload.
            if (reply_bytes == 0)
                reply_bytes = entry.payload.size();
            else if (entry.payload.size() != reply_bytes)
                throw DataError("transcript audit: reply sizes differ across sites");
        }
    }
}

namespace {

template <typename F>
auto stage(const std::string& name, F&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        rethrow_tagged(e, name);
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentResult result;
    result.data = stage("prepare", [&] { return prepare_data(config); });
    const auto& sites = result.data.sites;
    const std::size_t K = sites.size();

    PipelineConfig pcfg = config.pipeline;
    pcfg.seed = config.seed;
    if (config.lead_largest) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < K; ++j)
            if (sites[j].n_rows() > sites[best].n_rows()) best = j;
        pcfg.lead_index = best;
    }

    result.federated = stage("federated arm",
                             [&] { return run_pipeline(sites, result.data.weights, pcfg); });
    audit_transcript(result.federated.fit.federation.transcript, K);

    PipelineConfig solo = pcfg;
    solo.lead_index = 0;
    // With one site the pooled cohort is that site verbatim (same site_id,
    // hence same forest stream), which makes the K=1 reduction exact.
    result.pooled = stage("pooled arm", [&] {
        return run_pipeline({K == 1 ? sites[0] : concat(sites)}, SiteWeights{{1.0}}, solo);
    });

    for (const auto& site : sites)
        result.locals.push_back(
            stage("local arm site " + std::to_string(site.site_id),
                  [&] { return run_pipeline({site}, SiteWeights{{1.0}}, solo); }));

    for (std::size_t j = 0; j < K; ++j)
        result.table.push_back(
            {"Local site " + std::to_string(sites[j].site_id),
             evaluate_model(result.locals[j].plan, result.locals[j].fit.card, sites,
                            result.data.weights)});
    result.table.push_back({"Federated", evaluate_model(result.federated.plan,
                                                        result.federated.fit.card, sites,
                                                        result.data.weights)});
    result.table.push_back({"Pooled", evaluate_model(result.pooled.plan,
                                                     result.pooled.fit.card, sites,
                                                     result.data.weights)});
    return result;
}

std::string render_report(const ExperimentResult& result) {
    std::string md = "# Federated scorecard experiment\n\n";

    md += "## Cross-site test AUC\n\n";
    md += "| Model |";
    for (const auto& s : result.table.front().report.sites)
        md += " Site " + std::to_string(s.site_id) + " |";
    md += " M1 | M2 |\n|---|";
    for (std::size_t i = 0; i < result.table.front().report.sites.size() + 2; ++i) md += "---|";
    md += "\n";
    for (const auto& row : result.table) {
        md += "| " + row.name + " |";
        for (const auto& s : row.report.sites)
            md += " " + fmt4(s.auc) + " (" + fmt4(s.ci_low) + "-" + fmt4(s.ci_high) + ") |";
        md += " " + fmt4(row.report.m1) + " | " + fmt4(row.report.m2) + " |\n";
    }

    md += "\n## Model selection\n\n| Model | Selected m | Variables |\n|---|---|---|\n";
    auto selection_row = [&md](const std::string& name, const PipelineResult& r) {
        std::string vars;
        for (std::size_t i = 0; i < r.selected.size(); ++i) {
            if (i) vars += ", ";
            vars += r.selected[i];
        }
        md += "| " + name + " | " + std::to_string(r.selected_m) + " | " + vars + " |\n";
    };
    for (std::size_t j = 0; j < result.locals.size(); ++j)
        selection_row(result.table[j].name, result.locals[j]);
    selection_row("Federated", result.federated);
    selection_row("Pooled", result.pooled);

    auto card_section = [&md](const std::string& name, const ScoreCard& card) {
        md += "\n## Scorecard: " + name + "\n\n" + card.to_markdown();
    };
    card_section("Federated", result.federated.fit.card);
    card_section("Pooled", result.pooled.fit.card);
    for (std::size_t j = 0; j < result.locals.size(); ++j)
        card_section(result.table[j].name, result.locals[j].fit.card);
    return md;
}

namespace {

void write_arm(const std::filesystem::path& dir, const PipelineResult& arm,
               const EvaluationReport& cross_site, std::vector<std::string>& files,
               const std::filesystem::path& root) {
    std::filesystem::create_directories(dir);
    auto emit_json = [&](const char* name, Json j) {
        write_json_file(dir / name, j);
        files.push_back(std::filesystem::relative(dir / name, root).generic_string());
    };

    Json ranking;
    ranking["format_version"] = 1;
    Json locals = Json::array();
    for (const auto& lr : arm.local_rankings) locals.push_back(lr.to_json());
    ranking["local"] = std::move(locals);
    Json sums = Json::object(), ranks = Json::object();
    for (const auto& [name, s] : arm.ranking.weighted_sums) sums[name] = s;
    for (const auto& [name, r] : arm.ranking.global_ranks) ranks[name] = r;
    ranking["weighted_sums"] = std::move(sums);
    ranking["global_ranks"] = std::move(ranks);
    emit_json("ranking.json", std::move(ranking));

    Json cutoffs;
    cutoffs["format_version"] = 1;
    cutoffs["cutoffs"] = arm.unified_cutoffs.to_json();
    emit_json("cutoffs.json", std::move(cutoffs));

    emit_json("curve.json", arm.curve.to_json());

    Json selection;
    selection["format_version"] = 1;
    selection["m"] = arm.selected_m;
    selection["variables"] = arm.selected;
    emit_json("selection.json", std::move(selection));

    emit_json("scorecard.json", arm.fit.card.to_json());
    write_text_file(dir / "scorecard.md", arm.fit.card.to_markdown());
    files.push_back(std::filesystem::relative(dir / "scorecard.md", root).generic_string());

    emit_json("evaluation.json", cross_site.to_json());

    plot_parsimony(arm.curve, arm.selected_m, dir / "parsimony.svg");
    files.push_back(std::filesystem::relative(dir / "parsimony.svg", root).generic_string());
}

}  // namespace

void write_bundle(const ExperimentResult& result, const ExperimentConfig& config,
                  const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;

    write_arm(out_dir / "federated", result.federated,
              result.table[result.locals.size()].report, files, out_dir);
    Json transcript;
    transcript["format_version"] = 1;
    transcript["entries"] = result.federated.fit.federation.transcript.to_json();
    write_json_file(out_dir / "federated" / "transcript.json", transcript);
    files.push_back("federated/transcript.json");

    write_arm(out_dir / "pooled", result.pooled, result.table[result.locals.size() + 1].report,
              files, out_dir);
    for (std::size_t j = 0; j < result.locals.size(); ++j) {
        const int id = result.data.sites[j].site_id;
        write_arm(out_dir / "local" / ("site_" + std::to_string(id)), result.locals[j],
                  result.table[j].report, files, out_dir);
    }

    Json table;
    table["format_version"] = 1;
    Json models = Json::array();
    for (const auto& row : result.table) {
        Json m;
        m["name"] = row.name;
        m["evaluation"] = row.report.to_json();
        models.push_back(std::move(m));
    }
    table["models"] = std::move(models);
    write_json_file(out_dir / "comparison.json", table);
    files.push_back("comparison.json");

    write_text_file(out_dir / "report.md", render_report(result));
    files.push_back("report.md");

    Json manifest;
    manifest["format_version"] = 1;
    manifest["tool"] = "fedscore";
    manifest["tool_version"] = "0.1.0";
    manifest["seed"] = config.seed;
    manifest["config"] = config.to_json();
    Json sites = Json::array();
    for (const auto& site : result.data.sites) {
        Json s;
        s["site_id"] = site.site_id;
        s["rows"] = site.n_rows();
        s["train"] = site.count(Split::Train);
        s["validation"] = site.count(Split::Validation);
        s["test"] = site.count(Split::Test);
        sites.push_back(std::move(s));
    }
    manifest["sites"] = std::move(sites);
    if (result.data.load_report.rows_excluded_missing > 0)
        manifest["rows_excluded_missing"] = result.data.load_report.rows_excluded_missing;
    std::sort(files.begin(), files.end());
    manifest["files"] = files;
    write_json_file(out_dir / "manifest.json", manifest);
}

}  // namespace fedscore
