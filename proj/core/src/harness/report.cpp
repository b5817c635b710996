#include "evasion/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evasion/error.hpp"
#include "evasion/featurespace/csv.hpp"

namespace evasion {
namespace {

using nlohmann::json;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string cell_key(const AttackSummary& s) {
  return csv::escape(s.model) + ',' + std::string(category_code(s.category)) +
         ',' + s.variant;
}

json quartiles_json(const Quartiles& q) {
  return json{{"min", q.min}, {"q1", q.q1}, {"median", q.median},
              {"q3", q.q3},   {"max", q.max}};
}

json summary_json(const AttackSummary& s) {
  json most = json::array();
  for (const auto& [name, count] : s.most_added) {
    most.push_back({{"feature", name}, {"count", count}});
  }
  json records = json::array();
  for (const auto& r : s.records) records.push_back(to_json(r));
  return json{{"model", s.model},
              {"category", category_code(s.category)},
              {"variant", s.variant},
              {"attacked", s.attacked},
              {"successes", s.successes},
              {"success_rate", s.success_rate},
              {"mean_num_added", s.mean_num_added},
              {"fitness", quartiles_json(s.fitness)},
              {"fitness_count", s.fitness_count},
              {"most_added", most},
              {"excluded", s.excluded},
              {"records", records}};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json to_json(const SampleRecord& r) {
  return json{{"app_id", r.app_id},
              {"success", r.success},
              {"num_added", r.num_added},
              {"added_features", r.added_features},
              {"query_count", r.query_count},
              {"generations_run", r.generations_run},
              {"final_proba", r.final_proba},
              {"fitness_trajectory", r.fitness_trajectory},
              {"best_fitness", r.best_fitness},
              {"budget_exhausted", r.budget_exhausted}};
}

Quartiles quartiles(std::vector<double> v) {
  Quartiles q;
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double frac) {
    const double pos = frac * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return v[lo] + (v[hi] - v[lo]) * t;
  };
  q.min = v.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = v.back();
  return q;
}

void summarize(AttackSummary& s) {
  s.attacked = s.records.size();
  s.successes = 0;
  std::size_t added = 0;
  std::vector<double> fitness;
  std::map<std::string, std::size_t> counts;
  for (const auto& r : s.records) {
    if (!r.success) continue;
    ++s.successes;
    added += r.num_added;
    fitness.push_back(r.best_fitness);
    for (const auto& f : r.added_features) ++counts[f];
  }
  s.success_rate = s.attacked == 0 ? 0.0
                                   : static_cast<double>(s.successes) /
                                         static_cast<double>(s.attacked);
  s.mean_num_added = s.successes == 0 ? 0.0
                                      : static_cast<double>(added) /
                                            static_cast<double>(s.successes);
  s.fitness = quartiles(fitness);
  s.fitness_count = fitness.size();
  s.most_added.assign(counts.begin(), counts.end());
  std::stable_sort(s.most_added.begin(), s.most_added.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
}

json success_ordering(const ExperimentReport& report) {
  json out = json::object();
  std::map<std::string, std::vector<std::pair<double, std::string>>> by_cat;
  for (const auto& s : report.attacks) {
    if (s.variant != "baseline") continue;
    by_cat[std::string(category_code(s.category))].emplace_back(s.success_rate,
                                                                s.model);
  }
  for (auto& [cat, v] : by_cat) {
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    json names = json::array();
    for (const auto& [rate, model] : v) names.push_back(model);
    out[cat] = names;
  }
  return out;
}

json report_to_json(const ExperimentReport& report) {
  json detection = json::array();
  for (const auto& m : report.detection) {
    detection.push_back({{"model", m.model},
                         {"tp", m.metrics.tp},
                         {"fp", m.metrics.fp},
                         {"fn", m.metrics.fn},
                         {"tn", m.metrics.tn},
                         {"accuracy", m.metrics.accuracy},
                         {"precision", m.metrics.precision},
                         {"recall", m.metrics.recall}});
  }
  json attacks = json::array();
  for (const auto& s : report.attacks) attacks.push_back(summary_json(s));
  json selected = json::array();
  for (Category c : report.selected_categories) selected.push_back(category_code(c));

  json j{{"seed", report.seed},
         {"detection", detection},
         {"selected_categories", selected},
         {"attacks", attacks},
         {"success_ordering", success_ordering(report)}};
  if (report.importance) {
    json imp = json::object();
    for (const auto& [c, v] : report.importance->per_category) {
      imp[std::string(category_code(c))] = v;
    }
    j["importance"] = {{"per_category", imp},
                       {"oob_error", report.importance->oob_error_base},
                       {"oob_skipped", report.importance->oob_skipped}};
  }
  if (report.distillation) {
    const auto& d = *report.distillation;
    j["distillation"] = {{"temperature", d.temperature},
                         {"teacher_accuracy", d.teacher_accuracy},
                         {"student_accuracy", d.student_accuracy},
                         {"accuracy_regression", d.accuracy_regression}};
  }
  return j;
}

std::string detection_csv(const ExperimentReport& report) {
  std::string out = "model,tp,fp,fn,tn,accuracy,precision,recall\n";
  for (const auto& m : report.detection) {
    out += csv::escape(m.model) + ',' + std::to_string(m.metrics.tp) + ',' +
           std::to_string(m.metrics.fp) + ',' + std::to_string(m.metrics.fn) +
           ',' + std::to_string(m.metrics.tn) + ',' +
           format_double(m.metrics.accuracy) + ',' +
           format_double(m.metrics.precision) + ',' +
           format_double(m.metrics.recall) + '\n';
  }
  return out;
}

std::string attack_csv(const ExperimentReport& report) {
  std::string out =
      "model,category,variant,attacked,successes,success_rate,mean_num_added\n";
  for (const auto& s : report.attacks) {
    out += cell_key(s) + ',' + std::to_string(s.attacked) + ',' +
           std::to_string(s.successes) + ',' + format_double(s.success_rate) +
           ',' + format_double(s.mean_num_added) + '\n';
  }
  return out;
}

std::string trajectory_csv(const ExperimentReport& report) {
  std::string out = "model,category,variant,app_id,generation,best_fitness\n";
  for (const auto& s : report.attacks) {
    const std::string key = cell_key(s);
    for (const auto& r : s.records) {
      for (std::size_t g = 0; g < r.fitness_trajectory.size(); ++g) {
        out += key + ',' + csv::escape(r.app_id) + ',' + std::to_string(g) +
               ',' + format_double(r.fitness_trajectory[g]) + '\n';
      }
    }
  }
  return out;
}

std::string boxplot_csv(const ExperimentReport& report) {
  std::string out = "model,category,variant,count,min,q1,median,q3,max\n";
  for (const auto& s : report.attacks) {
    const Quartiles& q = s.fitness;
    out += cell_key(s) + ',' + std::to_string(s.fitness_count) + ',' +
           format_double(q.min) + ',' + format_double(q.q1) + ',' +
           format_double(q.median) + ',' + format_double(q.q3) + ',' +
           format_double(q.max) + '\n';
  }
  return out;
}

std::string most_added_csv(const ExperimentReport& report) {
  std::string out = "model,category,variant,rank,feature,count\n";
  for (const auto& s : report.attacks) {
    const std::string key = cell_key(s);
    for (std::size_t i = 0; i < s.most_added.size(); ++i) {
      out += key + ',' + std::to_string(i + 1) + ',' +
             csv::escape(s.most_added[i].first) + ',' +
             std::to_string(s.most_added[i].second) + '\n';
    }
  }
  return out;
}

std::string records_jsonl(const ExperimentReport& report) {
  std::string out;
  for (const auto& s : report.attacks) {
    for (const auto& r : s.records) {
      json j = to_json(r);
      j["model"] = s.model;
      j["category"] = category_code(s.category);
      j["variant"] = s.variant;
      out += j.dump() + '\n';
    }
  }
  return out;
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& dir,
                                               const Vocabulary* vocab) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  std::vector<std::pair<std::string, std::string>> files = {
      {"report.json", report_to_json(report).dump(2) + '\n'},
      {"detection_metrics.csv", detection_csv(report)},
      {"attack_results.csv", attack_csv(report)},
      {"fitness_trajectories.csv", trajectory_csv(report)},
      {"fitness_boxplot.csv", boxplot_csv(report)},
      {"most_added.csv", most_added_csv(report)},
      {"records.jsonl", records_jsonl(report)},
  };
  if (report.importance) {
    files.emplace_back("importance.csv", importance_csv(*report.importance));
    if (vocab != nullptr) {
      files.emplace_back("importance.json",
                         importance_json(*report.importance, *vocab).dump(2) + '\n');
    }
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    write_file(dir / name, text);
    written.push_back(dir / name);
  }
  return written;
}

}  // namespace evasion
