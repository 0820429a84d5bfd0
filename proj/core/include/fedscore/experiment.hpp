#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedscore/csv.hpp"
#include "fedscore/pipeline.hpp"
#include "fedscore/synthetic.hpp"

namespace fedscore {

// Everything one experiment needs: a data source (CSV or synthetic),
// how to split it into sites, and the pipeline knobs shared by all arms.
struct ExperimentConfig {
    // CSV source (used when csv_path is non-empty)...
    std::string csv_path;
    std::string schema_path;
    // ...or a synthetic source.
    std::optional<SyntheticPlan> synthetic;
    std::vector<double> beta_true;
    std::size_t n = 0;

    FederationConfig federation;
    PipelineConfig pipeline;
    bool lead_largest = false;  // overrides pipeline.lead_index
    std::uint64_t seed = 1;
    std::string out_dir;

    void validate() const;
    Json to_json() const;
    static ExperimentConfig from_json(const Json& j);
    static ExperimentConfig load_file(const std::filesystem::path& path);
};

struct PreparedData {
    Schema schema;
    std::vector<SiteDataset> sites;  // split-tagged
    SiteWeights weights;
    LoadReport load_report;
};

// Load or synthesize rows, partition into sites, tag splits; all downstream
// arms consume these exact tags.
PreparedData prepare_data(const ExperimentConfig& config);

// Structural audit of a one-shot transcript: exactly one broadcast and
// n_sites-1 replies, every payload parses to the documented shape, and reply
// sizes carry only O(p^2) numbers. Throws DataError on any violation.
void audit_transcript(const Transcript& transcript, std::size_t n_sites);

struct ExperimentResult {
    PreparedData data;
    PipelineResult federated;
    PipelineResult pooled;
    std::vector<PipelineResult> locals;  // one per site, in site order

    // Cross-site comparison: every arm's final card evaluated on every
    // site's test rows (rows of the comparison table).
    struct ModelRow {
        std::string name;
        EvaluationReport report;
    };
    std::vector<ModelRow> table;  // locals..., then "Federated", "Pooled"
};

// The three arms on shared prepared data. The federated arm talks only
// through the one-shot protocol; its transcript is audited here.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Markdown summary: comparison table (per-site AUC/CI, M1, M2) plus each
// arm's rendered scorecard and selection outcome.
std::string render_report(const ExperimentResult& result);

// Write the bundle under `out_dir`: manifest, per-arm scorecards, curves,
// plots, evaluations, the federated transcript, and report.md.
void write_bundle(const ExperimentResult& result, const ExperimentConfig& config,
                  const std::filesystem::path& out_dir);

}  // namespace fedscore
