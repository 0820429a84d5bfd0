#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fedscore/errors.hpp"
#include "fedscore/experiment.hpp"
#include "fedscore/jsonio.hpp"
#include "fedscore/plot.hpp"

namespace fs = std::filesystem;
using namespace fedscore;

namespace {

struct Options {
    std::string config_path;
    std::string curve_path;  // select/plot input
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> sites;
    std::optional<int> d_max;
    std::optional<double> epsilon;
    std::optional<int> s_max;
    std::optional<std::string> lead;
};

void add_common(CLI::App* cmd, Options& o, bool config_required) {
    auto* config = cmd->add_option("--config", o.config_path, "experiment config (JSON)");
    if (config_required) config->required();
    cmd->add_option("--seed", o.seed, "master seed (overrides config)");
    cmd->add_option("--sites", o.sites, "site count (overrides config; equal proportions)");
    cmd->add_option("--d-max", o.d_max, "maximum model size D");
    cmd->add_option("--epsilon", o.epsilon, "parsimony plateau tolerance");
    cmd->add_option("--s-max", o.s_max, "maximum total score");
    cmd->add_option("--lead", o.lead, "lead site index, or \"largest\"");
    cmd->add_option("--out", o.out, "output directory (or file)");
}

ExperimentConfig load_config(const Options& o) {
    ExperimentConfig cfg = ExperimentConfig::load_file(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.sites) {
        cfg.federation.sites = *o.sites;
        cfg.federation.proportions.assign(static_cast<std::size_t>(*o.sites),
                                          1.0 / static_cast<double>(*o.sites));
    }
    if (o.d_max) cfg.pipeline.d_max = *o.d_max;
    if (o.epsilon) cfg.pipeline.epsilon = *o.epsilon;
    if (o.s_max) cfg.pipeline.s_max = *o.s_max;
    if (o.lead) {
        if (*o.lead == "largest") {
            cfg.lead_largest = true;
        } else {
            cfg.lead_largest = false;
            cfg.pipeline.lead_index = static_cast<std::size_t>(std::stoul(*o.lead));
        }
    }
    if (!o.out.empty()) cfg.out_dir = o.out;
    cfg.federation.seed = cfg.seed;
    cfg.pipeline.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

fs::path require_out(const ExperimentConfig& cfg) {
    if (cfg.out_dir.empty())
        throw ConfigError("an output directory is required (--out or config \"output\")");
    return cfg.out_dir;
}

PipelineConfig effective_pipeline(const ExperimentConfig& cfg, const PreparedData& prep) {
    PipelineConfig pcfg = cfg.pipeline;
    pcfg.seed = cfg.seed;
    if (cfg.lead_largest) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < prep.sites.size(); ++j)
            if (prep.sites[j].n_rows() > prep.sites[best].n_rows()) best = j;
        pcfg.lead_index = best;
    }
    return pcfg;
}

Json ranking_json(const std::vector<LocalRanking>& locals, const GlobalRanking& global) {
    Json j;
    j["format_version"] = 1;
    Json local_arr = Json::array();
    for (const auto& lr : locals) local_arr.push_back(lr.to_json());
    j["local"] = std::move(local_arr);
    Json sums = Json::object(), ranks = Json::object();
    for (const auto& [name, s] : global.weighted_sums) sums[name] = s;
    for (const auto& [name, r] : global.global_ranks) ranks[name] = r;
    j["weighted_sums"] = std::move(sums);
    j["global_ranks"] = std::move(ranks);
    return j;
}

void cmd_synth(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    if (!cfg.synthetic) throw ConfigError("synth requires a \"synthetic\" config block");
    const fs::path out = require_out(cfg);
    fs::create_directories(out);

    Eigen::VectorXd beta(static_cast<Eigen::Index>(cfg.beta_true.size()));
    for (std::size_t i = 0; i < cfg.beta_true.size(); ++i)
        beta[static_cast<Eigen::Index>(i)] = cfg.beta_true[i];
    const SiteDataset data = generate_synthetic(cfg.n, beta, *cfg.synthetic, cfg.seed);
    save_csv(out / "data.csv", data, false);
    data.schema.save_file(out / "schema.json");
    std::cout << "wrote " << (out / "data.csv").string() << " (" << data.n_rows()
              << " rows)\n";
}

void cmd_partition(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    const fs::path out = require_out(cfg);
    fs::create_directories(out);

    const PreparedData prep = prepare_data(cfg);
    prep.schema.save_file(out / "schema.json");
    Json meta;
    meta["format_version"] = 1;
    meta["weights"] = prep.weights.values;
    Json sites = Json::array();
    for (const auto& site : prep.sites) {
        save_csv(out / ("site_" + std::to_string(site.site_id) + ".csv"), site, true);
        sites.push_back(Json{{"site_id", site.site_id},
                             {"rows", site.n_rows()},
                             {"train", site.count(Split::Train)},
                             {"validation", site.count(Split::Validation)},
                             {"test", site.count(Split::Test)}});
    }
    meta["sites"] = std::move(sites);
    write_json_file(out / "partition.json", meta);
    std::cout << "wrote " << prep.sites.size() << " site files under " << out.string() << "\n";
}

void cmd_rank(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    const fs::path out = require_out(cfg);
    fs::create_directories(out);

    const PreparedData prep = prepare_data(cfg);
    std::vector<LocalRanking> locals;
    for (const auto& site : prep.sites)
        locals.push_back(forest_importance(site, cfg.pipeline.forest,
                                           forest_stream_seed(cfg.seed, site.site_id)));
    const GlobalRanking global = aggregate_rankings(locals, prep.weights);
    write_json_file(out / "ranking.json", ranking_json(locals, global));
    std::cout << "global ranking:";
    for (const auto& name : global.order()) std::cout << " " << name;
    std::cout << "\n";
}

void cmd_bin(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    const fs::path out = require_out(cfg);
    fs::create_directories(out);

    const PreparedData prep = prepare_data(cfg);
    Json j;
    j["format_version"] = 1;
    Json local_arr = Json::array();
    std::vector<CutoffSet> locals;
    for (const auto& site : prep.sites) {
        locals.push_back(local_cutoffs(site, cfg.pipeline.binning));
        local_arr.push_back(
            Json{{"site_id", site.site_id}, {"cutoffs", locals.back().to_json()}});
    }
    j["local"] = std::move(local_arr);
    j["federated"] = federate_cutoffs(locals, prep.weights).to_json();
    write_json_file(out / "cutoffs.json", j);
    std::cout << "wrote " << (out / "cutoffs.json").string() << "\n";
}

void cmd_fit(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    const fs::path out = require_out(cfg);
    fs::create_directories(out);

    const PreparedData prep = prepare_data(cfg);
    const PipelineConfig pcfg = effective_pipeline(cfg, prep);

    // Module 2 then module 3 over every variable (no selection step here).
    std::vector<CutoffSet> locals;
    for (const auto& site : prep.sites) locals.push_back(local_cutoffs(site, pcfg.binning));
    const CutoffSet unified = federate_cutoffs(locals, prep.weights);
    const TransformPlan plan =
        make_transform_plan(prep.sites[pcfg.lead_index], unified, pcfg.binning);
    std::vector<SiteDataset> transformed;
    for (const auto& site : prep.sites) transformed.push_back(apply_transform(site, plan));

    const RefitResult fit =
        refit_final(transformed, prep.schema.variable_names(), prep.weights, pcfg);

    Json j;
    j["format_version"] = 1;
    j["columns"] = fit.encoding.column_names;
    std::vector<double> beta(fit.beta.data(), fit.beta.data() + fit.beta.size());
    j["beta"] = beta;
    j["converged"] = fit.federation.fit.converged;
    j["iterations"] = fit.federation.fit.iterations;
    write_json_file(out / "fit.json", j);

    Json transcript;
    transcript["format_version"] = 1;
    transcript["entries"] = fit.federation.transcript.to_json();
    write_json_file(out / "transcript.json", transcript);

    write_json_file(out / "scorecard.json", fit.card.to_json());
    write_text_file(out / "scorecard.md", fit.card.to_markdown());
    std::cout << "wrote " << (out / "fit.json").string() << "\n";
}

void cmd_evaluate(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    const fs::path out = require_out(cfg);
    fs::create_directories(out);

    const PreparedData prep = prepare_data(cfg);
    const PipelineResult result =
        run_pipeline(prep.sites, prep.weights, effective_pipeline(cfg, prep));

    write_json_file(out / "ranking.json", ranking_json(result.local_rankings, result.ranking));
    write_json_file(out / "curve.json", result.curve.to_json());
    Json selection;
    selection["format_version"] = 1;
    selection["m"] = result.selected_m;
    selection["variables"] = result.selected;
    write_json_file(out / "selection.json", selection);
    write_json_file(out / "scorecard.json", result.fit.card.to_json());
    write_text_file(out / "scorecard.md", result.fit.card.to_markdown());
    write_json_file(out / "evaluation.json", result.report.to_json());
    plot_parsimony(result.curve, result.selected_m, out / "parsimony.svg");
    std::cout << "M1 " << result.report.m1 << ", M2 " << result.report.m2 << " ("
              << result.report.sites.size() << " sites)\n";
}

void cmd_run(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    const fs::path out = require_out(cfg);
    const ExperimentResult result = run_experiment(cfg);
    write_bundle(result, cfg, out);
    const auto& fed = result.table[result.locals.size()].report;
    const auto& pooled = result.table[result.locals.size() + 1].report;
    std::cout << "federated M1 " << fed.m1 << ", M2 " << fed.m2 << "; pooled M1 " << pooled.m1
              << ", M2 " << pooled.m2 << "\n";
    std::cout << "bundle written to " << out.string() << "\n";
}

void cmd_select(const Options& o) {
    ParsimonyCurve curve = ParsimonyCurve::from_json(read_json_file(o.curve_path));
    if (o.epsilon) curve.epsilon = *o.epsilon;
    const ParsimonyPoint& point = select_model(curve);
    Json j;
    j["format_version"] = 1;
    j["m"] = point.m;
    j["variables"] = point.variables;
    j["psi"] = point.psi;
    if (o.out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        write_json_file(o.out, j);
        std::cout << "wrote " << o.out << "\n";
    }
}

void cmd_plot(const Options& o) {
    const ParsimonyCurve curve = ParsimonyCurve::from_json(read_json_file(o.curve_path));
    const fs::path out = o.out.empty() ? fs::path("parsimony.svg") : fs::path(o.out);
    plot_parsimony(curve, select_model(curve).m, out);
    std::cout << "wrote " << out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated clinical scorecard toolkit"};
    app.require_subcommand(1);

    Options o;
    add_common(app.add_subcommand("synth", "generate a synthetic cohort CSV"), o, true);
    add_common(app.add_subcommand("partition", "split a cohort into per-site CSVs"), o, true);
    add_common(app.add_subcommand("rank", "per-site forest importance + global ranking"), o,
               true);
    add_common(app.add_subcommand("bin", "local and federated quantile cutoffs"), o, true);
    add_common(app.add_subcommand("fit", "one-shot federated fit on all variables"), o, true);
    add_common(app.add_subcommand("evaluate", "full pipeline + cross-site evaluation"), o,
               true);
    add_common(app.add_subcommand("run", "three-arm experiment bundle"), o, true);

    auto* select = app.add_subcommand("select", "apply the plateau rule to a saved curve");
    select->add_option("curve", o.curve_path, "parsimony curve JSON")->required();
    add_common(select, o, false);

    auto* plot = app.add_subcommand("plot", "render a saved curve as SVG");
    plot->add_option("curve", o.curve_path, "parsimony curve JSON")->required();
    add_common(plot, o, false);

    try {
        app.parse(argc, argv);
        if (app.got_subcommand("synth")) cmd_synth(o);
        if (app.got_subcommand("partition")) cmd_partition(o);
        if (app.got_subcommand("rank")) cmd_rank(o);
        if (app.got_subcommand("bin")) cmd_bin(o);
        if (app.got_subcommand("fit")) cmd_fit(o);
        if (app.got_subcommand("evaluate")) cmd_evaluate(o);
        if (app.got_subcommand("run")) cmd_run(o);
        if (app.got_subcommand("select")) cmd_select(o);
        if (app.got_subcommand("plot")) cmd_plot(o);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::Config);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
