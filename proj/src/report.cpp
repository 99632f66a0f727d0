#include "decoylab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "decoylab/backend.hpp"
#include "decoylab/errors.hpp"
#include "decoylab/experiment.hpp"

namespace decoylab {

namespace fs = std::filesystem;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string slugify(std::string_view text) {
  std::string out;
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out += static_cast<char>(std::tolower(u));
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "job" : out;
}

namespace {

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) { row(header); }

  void row(std::initializer_list<std::string_view> fields) {
    bool first = true;
    for (auto f : fields) {
      if (!first) text_ += ',';
      text_ += csv_field(f);
      first = false;
    }
    text_ += '\n';
  }

  std::string str() const { return text_; }

 private:
  std::string text_;
};

std::string opt_number(bool present, double value) { return present ? format_number(value) : std::string(); }

std::string plain_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string order_of(const Permutation& p) {
  std::string s;
  for (Role r : p.slots()) s += r == Role::Target ? 'T' : r == Role::Competitor ? 'C' : 'D';
  return s;
}

std::string df_text(const std::vector<int>& df) {
  std::string s;
  for (std::size_t i = 0; i < df.size(); ++i) s += (i ? ";" : "") + std::to_string(df[i]);
  return s;
}

std::string conditions_csv(const ExperimentPlan& plan, const ExperimentResults& results) {
  Csv csv({"job", "variant", "condition", "aggregation", "p_target", "p_competitor", "p_decoy", "sem_target",
           "samples"});
  for (std::size_t i = 0; i < plan.arms.size(); ++i) {
    const Arm& arm = plan.arms[i];
    const auto& agg = results.arms[i];
    const std::string cond(to_string(arm.condition));
    if (!agg) {
      csv.row({arm.job, arm.variant, cond, "incomplete", "", "", "", "", ""});
      continue;
    }
    const bool decoy = arm.condition == Condition::Treatment;
    csv.row({arm.job, arm.variant, cond, to_string(agg->mode), format_number(agg->mean[Role::Target]),
             format_number(agg->mean[Role::Competitor]), opt_number(decoy, agg->mean[Role::Decoy]),
             format_number(agg->sem_target), agg->total_samples ? std::to_string(*agg->total_samples) : ""});
  }
  return csv.str();
}

std::string permutations_csv(const ExperimentPlan& plan, const ExperimentResults& results) {
  Csv csv({"job", "variant", "condition", "permutation", "order", "p_target", "p_competitor", "p_decoy", "samples"});
  for (std::size_t i = 0; i < plan.arms.size(); ++i) {
    const Arm& arm = plan.arms[i];
    if (!results.arms[i]) continue;
    const bool decoy = arm.condition == Condition::Treatment;
    for (const auto& p : results.arms[i]->per_permutation) {
      const auto& d = p.distribution;
      csv.row({arm.job, arm.variant, to_string(arm.condition), std::to_string(p.permutation_id),
               order_of(arm.prompts[static_cast<std::size_t>(p.permutation_id)].permutation),
               format_number(d[Role::Target]), format_number(d[Role::Competitor]),
               opt_number(decoy, d[Role::Decoy]), d.sample_count ? std::to_string(*d.sample_count) : ""});
    }
  }
  return csv.str();
}

std::string bias_csv(const ExperimentPlan& plan, const ExperimentResults& results) {
  Csv csv({"job", "variant", "decoy_q1", "decoy_q2", "region", "decoy_permit", "p_target_control",
           "p_target_treatment", "bias", "chi_square", "p_value", "count_basis", "verdict", "note"});
  for (std::size_t i = 0; i < plan.comparisons.size(); ++i) {
    const Comparison& c = plan.comparisons[i];
    const ComparisonResult& r = results.comparisons[i];
    const std::string q1 = std::to_string(c.decoy.point.q1), q2 = std::to_string(c.decoy.point.q2);
    const std::string permit = c.decoy.has_permit ? "yes" : "no";
    if (!r.bias) {
      csv.row({c.job, c.variant, q1, q2, to_string(c.decoy.region), permit, "", "", "", "", "", "", "", r.note});
      continue;
    }
    const auto& b = *r.bias;
    csv.row({c.job, c.variant, q1, q2, to_string(c.decoy.region), permit, format_number(b.p_target_control),
             format_number(b.p_target_treatment), format_number(b.bias), opt_number(b.test.has_value(), b.test ? b.test->statistic : 0.0),
             opt_number(b.test.has_value(), b.test ? b.test->p_value : 0.0), r.count_basis, r.verdict, r.note});
  }
  return csv.str();
}

std::string tests_csv(const ExperimentPlan& plan, const ExperimentResults& results) {
  Csv csv({"test", "label", "statistic", "df", "p_value", "significant", "n", "note"});
  if (plan.chi_square_per_comparison) {
    for (std::size_t i = 0; i < plan.comparisons.size(); ++i) {
      const auto& r = results.comparisons[i];
      const std::string label = plan.comparisons[i].job + " " + plan.comparisons[i].variant;
      if (!r.bias || !r.bias->test) {
        csv.row({"chi_square", label, "", "", "", "", "", r.note.empty() ? "incomplete" : r.note});
        continue;
      }
      const auto& t = *r.bias->test;
      const std::string note = r.count_basis == "nominal"
                                   ? "counts implied at " + plain_number(plan.config.nominal_samples) + " samples"
                                   : "";
      csv.row({"chi_square", label, format_number(t.statistic), df_text(t.df), format_number(t.p_value),
               t.significant ? "yes" : "no", "", note});
    }
  }
  for (std::size_t i = 0; i < plan.group_tests.size(); ++i) {
    const auto& g = plan.group_tests[i];
    const auto& r = results.group_tests[i];
    const std::string kind(to_string(g.kind));
    if (!r.outcome) {
      csv.row({kind, g.label, "", "", "", "", std::to_string(r.rows), r.note});
      continue;
    }
    csv.row({kind, g.label, format_number(r.outcome->statistic), df_text(r.outcome->df),
             format_number(r.outcome->p_value), r.outcome->significant ? "yes" : "no", std::to_string(r.rows),
             r.note});
  }
  return csv.str();
}

std::string failures_csv(const ExperimentResults& results) {
  Csv csv({"scope", "key", "message"});
  for (const auto& f : results.failures) csv.row({f.scope, f.key, f.message});
  return csv.str();
}

std::string map_csv(const BiasMap& map) {
  const Job& job = find_job(map.job);
  Csv csv({"q1", "q2", "q1_label", "q2_label", "region", "decoy_permit", "p_target_control", "p_target_treatment",
           "bias"});
  for (const auto& c : map.cells) {
    const auto& p = c.grid.point;
    csv.row({std::to_string(p.q1), std::to_string(p.q2), job.first.scale.describe(p.q1),
             job.second.scale.describe(p.q2), to_string(c.grid.region), c.grid.has_permit ? "yes" : "no",
             format_number(c.bias.p_target_control), format_number(c.bias.p_target_treatment),
             format_number(c.bias.bias)});
  }
  return csv.str();
}

std::string regions_csv(const BiasMap& map) {
  Csv csv({"region", "cells", "mean_bias"});
  for (const auto& s : map.region_summaries()) {
    csv.row({to_string(s.region), std::to_string(s.cells), format_number(s.mean_bias)});
  }
  return csv.str();
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string color_for(double bias) {
  const double t = std::min(1.0, std::abs(bias));
  const int r0 = bias >= 0 ? 178 : 33, g0 = bias >= 0 ? 24 : 102, b0 = bias >= 0 ? 43 : 172;
  auto mix = [t](int c) { return static_cast<int>(std::lround(255.0 * (1.0 - t) + c * t)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(r0), mix(g0), mix(b0));
  return buf;
}

}  // namespace

std::string render_heatmap_svg(const BiasMap& map) {
  const Job& job = find_job(map.job);
  const auto& xs = job.first.scale;
  const auto& ys = job.second.scale;
  constexpr int cell = 56, left = 120, top = 56, legend_w = 90;
  const int grid_w = xs.size() * cell, grid_h = ys.size() * cell;
  const int width = left + grid_w + legend_w + 30, height = top + grid_h + 70;

  std::string s;
  auto add = [&s](const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    s += buf;
  };
  add("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height, width, height);
  s += "<defs><linearGradient id=\"scale\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
       "<stop offset=\"0\" stop-color=\"" + color_for(-1.0) + "\"/>"
       "<stop offset=\"0.5\" stop-color=\"#ffffff\"/>"
       "<stop offset=\"1\" stop-color=\"" + color_for(1.0) + "\"/></linearGradient></defs>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  add("<text x=\"%d\" y=\"24\" font-size=\"14\" font-weight=\"bold\">", left);
  s += xml_escape(map.job) + ": P(target | treatment) - P(target | control)</text>\n";

  auto x_of = [&](int level) { return left + (level - xs.min_level()) * cell; };
  auto y_of = [&](int level) { return top + (ys.max_level() - level) * cell; };

  for (int q1 = xs.min_level(); q1 <= xs.max_level(); ++q1) {
    for (int q2 = ys.min_level(); q2 <= ys.max_level(); ++q2) {
      const Point p{q1, q2};
      const int x = x_of(q1), y = y_of(q2);
      if (p == map.target || p == map.competitor) {
        add("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"#404040\" stroke=\"#ffffff\"/>\n", x, y, cell,
            cell);
        add("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" fill=\"#ffffff\" font-size=\"16\">%s</text>\n",
            x + cell / 2, y + cell / 2 + 6, p == map.target ? "T" : "C");
        continue;
      }
      const BiasCell& c = map.at(p);
      const bool phantom = !c.grid.has_permit;
      add("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" stroke=\"%s\"%s/>\n", x, y, cell, cell,
          color_for(c.bias.bias).c_str(), phantom ? "#000000" : "#d0d0d0",
          phantom ? " stroke-dasharray=\"4 3\"" : "");
      char value[32];
      std::snprintf(value, sizeof value, "%.2f", c.bias.bias);
      std::string v = value;
      if (v == "-0.00") v = "0.00";
      add("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n", x + cell / 2, y + cell / 2 + 4, v.c_str());
    }
  }

  for (int q1 = xs.min_level(); q1 <= xs.max_level(); ++q1) {
    add("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n", x_of(q1) + cell / 2, top + grid_h + 16,
        xml_escape(xs.describe(q1)).c_str());
  }
  for (int q2 = ys.min_level(); q2 <= ys.max_level(); ++q2) {
    add("<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%s</text>\n", left - 6, y_of(q2) + cell / 2 + 4,
        xml_escape(ys.describe(q2)).c_str());
  }
  add("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n", left + grid_w / 2, top + grid_h + 40,
      xml_escape(job.first.label()).c_str());
  add("<text x=\"16\" y=\"%d\" text-anchor=\"middle\" transform=\"rotate(-90 16 %d)\">%s</text>\n",
      top + grid_h / 2, top + grid_h / 2, xml_escape(job.second.label()).c_str());

  const int lx = left + grid_w + 30;
  add("<rect x=\"%d\" y=\"%d\" width=\"18\" height=\"%d\" fill=\"url(#scale)\" stroke=\"#808080\"/>\n", lx, top,
      grid_h);
  add("<text x=\"%d\" y=\"%d\">+1</text>\n", lx + 24, top + 10);
  add("<text x=\"%d\" y=\"%d\">0</text>\n", lx + 24, top + grid_h / 2 + 4);
  add("<text x=\"%d\" y=\"%d\">-1</text>\n", lx + 24, top + grid_h);
  add("<text x=\"%d\" y=\"%d\" font-size=\"10\">dashed: no permit</text>\n", left, top + grid_h + 58);
  s += "</svg>\n";
  return s;
}

std::vector<ReportFile> render_reports(const ExperimentPlan& plan, const ExperimentResults& results) {
  std::vector<ReportFile> files = {
      {"reports/conditions.csv", conditions_csv(plan, results)},
      {"reports/permutations.csv", permutations_csv(plan, results)},
      {"reports/bias.csv", bias_csv(plan, results)},
      {"reports/tests.csv", tests_csv(plan, results)},
      {"reports/failures.csv", failures_csv(results)},
  };
  for (const auto& map : results.maps) {
    const std::string slug = slugify(map.job);
    files.push_back({"reports/map_" + slug + ".csv", map_csv(map)});
    files.push_back({"reports/regions_" + slug + ".csv", regions_csv(map)});
    files.push_back({"maps/" + slug + ".svg", render_heatmap_svg(map)});
  }
  return files;
}

std::map<std::string, std::string> write_reports(const std::vector<ReportFile>& files, const fs::path& dir) {
  std::map<std::string, std::string> hashes;
  for (const auto& f : files) {
    const fs::path path = dir / f.relative_path;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << f.content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
    hashes[f.relative_path] = sha256_hex(f.content);
  }
  return hashes;
}

}  // namespace decoylab
