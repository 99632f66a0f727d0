#pragma once

// CSV tables and SVG heatmaps. Output depends only on the plan and its
// results, never on paths or clocks.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "decoylab/analysis.hpp"

namespace decoylab {

struct ExperimentPlan;
struct ExperimentResults;

// Four decimals; "-0.0000" is written as "0.0000".
std::string format_number(double value);
std::string csv_field(std::string_view text);
std::string slugify(std::string_view text);

struct ReportFile {
  std::string relative_path;
  std::string content;
};

std::vector<ReportFile> render_reports(const ExperimentPlan& plan, const ExperimentResults& results);

// Diverging red/blue scale fixed to bias in [-1, 1].
std::string render_heatmap_svg(const BiasMap& map);

// Writes the files and returns relative path -> sha256 of the content.
std::map<std::string, std::string> write_reports(const std::vector<ReportFile>& files,
                                                 const std::filesystem::path& dir);

}  // namespace decoylab
