#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evasion/detectors/detector.hpp"
#include "evasion/detectors/metrics.hpp"
#include "evasion/featurespace/category.hpp"
#include "evasion/importance/importance.hpp"

namespace evasion {

/// One attacked sample, as written to records.jsonl.
struct SampleRecord {
  std::string app_id;
  bool success = false;
  std::size_t num_added = 0;
  std::vector<std::string> added_features;
  std::size_t query_count = 0;
  std::size_t generations_run = 0;
  Proba final_proba{};
  std::vector<double> fitness_trajectory;
  double best_fitness = 0.0;
  bool budget_exhausted = false;
};

nlohmann::json to_json(const SampleRecord& r);

/// Min, quartiles and max with linear interpolation between order
/// statistics. All zero for an empty input.
struct Quartiles {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

Quartiles quartiles(std::vector<double> values);

/// Results for one (model, category, variant) cell. Variants are
/// "baseline", "exclusion" and "distilled".
struct AttackSummary {
  std::string model;
  Category category = Category::S2;
  std::string variant = "baseline";
  std::size_t attacked = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  /// Mean num(delta) over successful attacks; 0 when none succeeded.
  double mean_num_added = 0.0;
  /// Best fitness of the successful adversarial samples.
  Quartiles fitness;
  std::size_t fitness_count = 0;
  /// (feature name, times added) by count descending, then name.
  std::vector<std::pair<std::string, std::size_t>> most_added;
  std::vector<std::string> excluded;
  std::vector<SampleRecord> records;
};

/// Fills the aggregate fields from `records`.
void summarize(AttackSummary& s);

struct ModelMetrics {
  std::string model;
  EvalMetrics metrics;
};

struct DistillationSummary {
  double temperature = 0.0;
  double teacher_accuracy = 0.0;
  double student_accuracy = 0.0;
  bool accuracy_regression = false;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  std::vector<ModelMetrics> detection;
  std::optional<ImportanceReport> importance;
  std::vector<Category> selected_categories;
  std::vector<AttackSummary> attacks;
  std::optional<DistillationSummary> distillation;
};

/// Model short names ordered by baseline success rate, highest first, per
/// category. Recorded for inspection only.
nlohmann::json success_ordering(const ExperimentReport& report);

nlohmann::json report_to_json(const ExperimentReport& report);

/// CSV renderings (header row always present).
std::string detection_csv(const ExperimentReport& report);
std::string attack_csv(const ExperimentReport& report);
std::string trajectory_csv(const ExperimentReport& report);
std::string boxplot_csv(const ExperimentReport& report);
std::string most_added_csv(const ExperimentReport& report);
std::string records_jsonl(const ExperimentReport& report);

/// Writes report.json, detection_metrics.csv, attack_results.csv,
/// fitness_trajectories.csv, fitness_boxplot.csv, most_added.csv,
/// records.jsonl and, when present, importance.csv/importance.json.
/// Returns the written paths. Throws IoError naming the file on failure.
std::vector<std::filesystem::path> emit_report(
    const ExperimentReport& report, const std::filesystem::path& dir,
    const Vocabulary* vocab = nullptr);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace evasion
