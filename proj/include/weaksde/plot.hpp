#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace weaksde {

enum class PlotKind { LoglogError, HistVsDensity };

PlotKind plot_kind_from_string(const std::string& name);
std::string to_string(PlotKind kind);

/// Columns a CSV must have, in order, to be plotted as `kind`.
const std::vector<std::string>& expected_columns(PlotKind kind);

/// Renders one SVG from the given CSVs. loglog_error draws one series per CSV (named by file stem)
/// plus a slope-1 guide; hist_vs_density takes exactly one CSV. Nothing is written when validation fails.
/// Default output is the first CSV with extension .svg. Returns the written path.
std::filesystem::path emit_plot(const std::vector<std::filesystem::path>& csvs, PlotKind kind,
                                const std::optional<std::filesystem::path>& out = std::nullopt);

}  // namespace weaksde
