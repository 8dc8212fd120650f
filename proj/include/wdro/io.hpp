#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wdro/dataset.hpp"

namespace wdro {

/// RFC-4180 rows. Quoted fields may contain commas, doubled quotes and line breaks.
struct CsvRow {
    std::size_t line = 0;  // physical line where the row starts, 1-based
    std::vector<std::string> fields;
};

std::vector<CsvRow> parse_csv(std::istream& in);
std::string csv_escape(std::string_view field);

enum class BinKind { Identity, FixedWidth, Categorical };

struct BinRule {
    BinKind kind = BinKind::Identity;
    double width = 0.0;                // FixedWidth
    std::vector<std::string> levels;   // Categorical; a level maps to its index
};

/// Binned value of a raw cell. nullopt when the cell cannot be read under the rule.
std::optional<double> apply_bin(const BinRule& rule, std::string_view raw);

enum class SupportMode {
    /// Cross-product of the per-column levels, observed plus declared.
    Full,
    /// Only the context vectors that occur in the data.
    Observed,
};

struct IngestConfig {
    std::vector<std::string> context_columns;
    std::string action_column;
    /// Declared action labels. Empty means the sorted observed labels.
    std::vector<std::string> actions;
    /// Boolean event columns turned into a cost by indicator_cost.
    std::vector<std::string> outcome_columns;
    std::map<std::string, double> cost_weights;  // missing columns weigh 1
    /// Pre-aggregated cost column, used instead of outcome columns. Needs y_max.
    std::string cost_column;
    std::map<std::string, BinRule> binning;  // missing columns use Identity
    SupportMode support = SupportMode::Full;
    std::optional<double> y_max;
};

/// Reads the JSON config. Throws InvalidConfig on malformed keys or non-positive widths.
IngestConfig parse_ingest_config(const nlohmann::json& j);
IngestConfig load_ingest_config(const std::filesystem::path& path);
nlohmann::json config_json(const IngestConfig& config);

/// "1/0", "true/false", "yes/no", "y/n", "t/f", case-insensitive.
std::optional<bool> parse_bool(std::string_view s);

/// Weighted sum of true events. Throws UnparsableOutcome on a non-boolean value.
double indicator_cost(std::span<const std::string> outcomes, std::span<const double> weights);

/// Parses a raw CSV into a dataset whose xi support is the set of observed costs. Throws
/// SchemaMismatch for missing columns, UnparsableRow naming the line, and EmptyDataset.
BanditDataset load_dataset(std::istream& in, const IngestConfig& config);
BanditDataset load_dataset(const std::filesystem::path& path, const IngestConfig& config);

/// Canonical form: `<stem>.csv` with (context, action, xi, cost) and a JSON sidecar holding
/// supports, action labels, y_max and the optional behavior policy and cost model.
void save_dataset(const BanditDataset& data, const std::filesystem::path& sidecar);
BanditDataset load_canonical(const std::filesystem::path& sidecar);

/// Loads a canonical sidecar (.json) or a raw CSV ingested with `config`.
BanditDataset read_dataset(const std::filesystem::path& path, const std::optional<IngestConfig>& config);

/// Distribution file: CSV whose last column is `weight` and whose other columns are
/// coordinates. Weights are rescaled to sum to one.
DiscreteDistribution load_distribution_csv(const std::filesystem::path& path);

/// Shortest decimal text that reads back to the same double.
std::string format_real(double v);

}  // namespace wdro
