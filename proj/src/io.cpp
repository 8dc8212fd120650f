#include "wdro/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "wdro/error.hpp"

namespace wdro {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_real(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<std::size_t> parse_index(std::string_view s) {
    s = trim(s);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return in;
}

json read_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::SchemaMismatch, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

[[noreturn]] void bad_row(std::size_t line, const std::string& why) {
    throw Error(ErrorKind::UnparsableRow, "line " + std::to_string(line) + ": " + why);
}

json support_json(const SupportSet& s) {
    json pts = json::array();
    for (const auto& p : s.points()) pts.push_back(p);
    return {{"dim", s.dim()}, {"points", pts}};
}

SupportPtr support_from(const json& j) {
    auto dim = j.at("dim").get<std::size_t>();
    auto pts = j.at("points").get<std::vector<Point>>();
    return make_support(std::move(pts), dim);
}

}  // namespace

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<CsvRow> parse_csv(std::istream& in) {
    std::vector<CsvRow> rows;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

    std::size_t line = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        CsvRow row{line, {}};
        std::string field;
        bool row_done = false;
        while (!row_done) {
            field.clear();
            if (i < n && text[i] == '"') {
                const std::size_t open_line = line;
                ++i;
                for (;;) {
                    if (i >= n) bad_row(open_line, "unterminated quoted field");
                    char c = text[i++];
                    if (c == '"') {
                        if (i < n && text[i] == '"') {
                            field += '"';
                            ++i;
                        } else {
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field += c;
                    }
                }
                if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
                    bad_row(open_line, "text after closing quote");
            } else {
                while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') field += text[i++];
            }
            row.fields.push_back(field);
            if (i < n && text[i] == ',') {
                ++i;
                continue;
            }
            if (i < n && text[i] == '\r') ++i;
            if (i < n && text[i] == '\n') ++i;
            ++line;
            row_done = true;
        }
        // Blank lines carry no record.
        if (!(row.fields.size() == 1 && row.fields[0].empty())) rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::optional<double> apply_bin(const BinRule& rule, std::string_view raw) {
    switch (rule.kind) {
        case BinKind::Identity:
            return parse_real(raw);
        case BinKind::FixedWidth: {
            auto v = parse_real(raw);
            if (!v) return std::nullopt;
            return std::floor(*v / rule.width) * rule.width;
        }
        case BinKind::Categorical: {
            auto t = trim(raw);
            auto it = std::find(rule.levels.begin(), rule.levels.end(), t);
            if (it == rule.levels.end()) return std::nullopt;
            return static_cast<double>(it - rule.levels.begin());
        }
    }
    return std::nullopt;
}

IngestConfig parse_ingest_config(const json& j) {
    IngestConfig c;
    try {
        c.context_columns = j.at("context_columns").get<std::vector<std::string>>();
        c.action_column = j.at("action_column").get<std::string>();
        c.actions = j.value("actions", std::vector<std::string>{});
        c.outcome_columns = j.value("outcome_columns", std::vector<std::string>{});
        c.cost_weights = j.value("cost_weights", std::map<std::string, double>{});
        c.cost_column = j.value("cost_column", std::string{});
        if (j.contains("y_max")) c.y_max = j.at("y_max").get<double>();
        auto mode = j.value("support", std::string("full"));
        if (mode == "full")
            c.support = SupportMode::Full;
        else if (mode == "observed")
            c.support = SupportMode::Observed;
        else
            throw Error(ErrorKind::InvalidConfig, "support must be 'full' or 'observed'");
        if (j.contains("binning")) {
            for (const auto& [col, spec] : j.at("binning").items()) {
                BinRule r;
                auto type = spec.at("type").get<std::string>();
                if (type == "identity") {
                    r.kind = BinKind::Identity;
                } else if (type == "fixed_width") {
                    r.kind = BinKind::FixedWidth;
                    r.width = spec.at("width").get<double>();
                    if (!(r.width > 0.0) || !std::isfinite(r.width))
                        throw Error(ErrorKind::InvalidConfig, "bin width for '" + col + "' must be positive");
                } else if (type == "categorical") {
                    r.kind = BinKind::Categorical;
                    r.levels = spec.at("levels").get<std::vector<std::string>>();
                    if (r.levels.empty())
                        throw Error(ErrorKind::InvalidConfig, "categorical '" + col + "' has no levels");
                } else {
                    throw Error(ErrorKind::InvalidConfig, "unknown bin type '" + type + "'");
                }
                c.binning[col] = std::move(r);
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, e.what());
    }
    if (c.context_columns.empty()) throw Error(ErrorKind::InvalidConfig, "context_columns is empty");
    if (c.outcome_columns.empty() == c.cost_column.empty())
        throw Error(ErrorKind::InvalidConfig, "give exactly one of outcome_columns and cost_column");
    if (!c.cost_column.empty() && !c.y_max)
        throw Error(ErrorKind::InvalidConfig, "cost_column needs y_max");
    for (const auto& [col, w] : c.cost_weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error(ErrorKind::InvalidConfig, "weight for '" + col + "' must be non-negative");
    return c;
}

IngestConfig load_ingest_config(const std::filesystem::path& path) { return parse_ingest_config(read_json(path)); }

json config_json(const IngestConfig& c) {
    json bins = json::object();
    for (const auto& [col, r] : c.binning) {
        switch (r.kind) {
            case BinKind::Identity: bins[col] = {{"type", "identity"}}; break;
            case BinKind::FixedWidth: bins[col] = {{"type", "fixed_width"}, {"width", r.width}}; break;
            case BinKind::Categorical: bins[col] = {{"type", "categorical"}, {"levels", r.levels}}; break;
        }
    }
    json j = {{"context_columns", c.context_columns},
              {"action_column", c.action_column},
              {"actions", c.actions},
              {"outcome_columns", c.outcome_columns},
              {"cost_weights", c.cost_weights},
              {"binning", bins},
              {"support", c.support == SupportMode::Full ? "full" : "observed"}};
    if (!c.cost_column.empty()) j["cost_column"] = c.cost_column;
    if (c.y_max) j["y_max"] = *c.y_max;
    return j;
}

std::optional<bool> parse_bool(std::string_view s) {
    auto t = lower(trim(s));
    if (t == "1" || t == "true" || t == "yes" || t == "y" || t == "t") return true;
    if (t == "0" || t == "false" || t == "no" || t == "n" || t == "f") return false;
    return std::nullopt;
}

double indicator_cost(std::span<const std::string> outcomes, std::span<const double> weights) {
    if (outcomes.size() != weights.size())
        throw Error(ErrorKind::LengthMismatch, "outcome and weight counts differ");
    double cost = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto b = parse_bool(outcomes[i]);
        if (!b) throw Error(ErrorKind::UnparsableOutcome, "'" + outcomes[i] + "' is not a boolean");
        if (*b) cost += weights[i];
    }
    return cost;
}

BanditDataset load_dataset(std::istream& in, const IngestConfig& config) {
    auto rows = parse_csv(in);
    if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "no header row");
    const auto& header = rows.front().fields;

    const std::size_t dim = config.context_columns.size();
    std::vector<std::size_t> ctx_cols;
    std::vector<BinRule> rules;
    for (const auto& name : config.context_columns) {
        ctx_cols.push_back(column_of(header, name));
        auto it = config.binning.find(name);
        rules.push_back(it == config.binning.end() ? BinRule{} : it->second);
    }
    const std::size_t action_col = column_of(header, config.action_column);
    std::vector<std::size_t> outcome_cols;
    std::vector<double> weights;
    for (const auto& name : config.outcome_columns) {
        outcome_cols.push_back(column_of(header, name));
        auto it = config.cost_weights.find(name);
        weights.push_back(it == config.cost_weights.end() ? 1.0 : it->second);
    }
    std::optional<std::size_t> cost_col;
    if (!config.cost_column.empty()) cost_col = column_of(header, config.cost_column);

    double y_max = 0.0;
    if (config.y_max)
        y_max = *config.y_max;
    else
        for (double w : weights) y_max += w;

    struct Raw {
        Point context;
        std::string action;
        double cost;
        std::size_t line;
    };
    std::vector<Raw> raw;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != header.size())
            bad_row(row.line, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(row.fields.size()));
        Raw rec{Point(dim), std::string(trim(row.fields[action_col])), 0.0, row.line};
        for (std::size_t k = 0; k < dim; ++k) {
            auto v = apply_bin(rules[k], row.fields[ctx_cols[k]]);
            if (!v || !std::isfinite(*v))
                bad_row(row.line, "cannot read '" + row.fields[ctx_cols[k]] + "' in column '" +
                                      config.context_columns[k] + "'");
            rec.context[k] = *v;
        }
        if (cost_col) {
            auto v = parse_real(row.fields[*cost_col]);
            if (!v) bad_row(row.line, "cannot read cost '" + row.fields[*cost_col] + "'");
            rec.cost = *v;
        } else {
            std::vector<std::string> vals;
            for (auto c : outcome_cols) vals.push_back(row.fields[c]);
            try {
                rec.cost = indicator_cost(vals, weights);
            } catch (const Error& e) {
                throw Error(ErrorKind::UnparsableOutcome, "line " + std::to_string(row.line) + ": " + e.what());
            }
        }
        if (!(rec.cost >= 0.0 && rec.cost <= y_max))
            bad_row(row.line, "cost " + format_real(rec.cost) + " outside [0, " + format_real(y_max) + "]");
        raw.push_back(std::move(rec));
    }
    if (raw.empty()) throw Error(ErrorKind::EmptyDataset, "no data rows");

    std::vector<std::string> actions = config.actions;
    if (actions.empty()) {
        std::set<std::string> seen;
        for (const auto& r : raw) seen.insert(r.action);
        actions.assign(seen.begin(), seen.end());
    }

    std::vector<Point> ctx_points;
    if (config.support == SupportMode::Observed) {
        std::set<Point> seen;
        for (const auto& r : raw) seen.insert(r.context);
        ctx_points.assign(seen.begin(), seen.end());
    } else {
        std::vector<std::vector<double>> levels(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            std::set<double> lv;
            for (const auto& r : raw) lv.insert(r.context[k]);
            for (std::size_t i = 0; i < rules[k].levels.size(); ++i) lv.insert(static_cast<double>(i));
            levels[k].assign(lv.begin(), lv.end());
        }
        std::size_t total = 1;
        for (const auto& lv : levels) {
            if (total > std::numeric_limits<std::size_t>::max() / lv.size() || total * lv.size() > 10'000'000)
                throw Error(ErrorKind::InstanceTooLarge, "context cross-product exceeds 1e7 points");
            total *= lv.size();
        }
        ctx_points.reserve(total);
        for (std::size_t idx = 0; idx < total; ++idx) {
            Point p(dim);
            std::size_t rem = idx;
            for (std::size_t k = dim; k-- > 0;) {
                p[k] = levels[k][rem % levels[k].size()];
                rem /= levels[k].size();
            }
            ctx_points.push_back(std::move(p));
        }
    }
    auto contexts = make_support(std::move(ctx_points), dim);

    std::set<double> cost_levels;
    for (const auto& r : raw) cost_levels.insert(r.cost);
    std::vector<double> xi_values(cost_levels.begin(), cost_levels.end());
    auto xi_support = std::make_shared<const SupportSet>(SupportSet::scalar(xi_values));

    std::vector<Record> records;
    records.reserve(raw.size());
    for (const auto& r : raw) {
        auto a = std::find(actions.begin(), actions.end(), r.action);
        if (a == actions.end()) bad_row(r.line, "unknown action '" + r.action + "'");
        auto x = contexts->find(r.context);
        auto xi = std::lower_bound(xi_values.begin(), xi_values.end(), r.cost);
        records.push_back({*x, static_cast<std::size_t>(a - actions.begin()),
                           static_cast<std::size_t>(xi - xi_values.begin()), r.cost});
    }
    return make_dataset(contexts, std::move(actions), xi_support, std::move(records), y_max);
}

BanditDataset load_dataset(const std::filesystem::path& path, const IngestConfig& config) {
    auto in = open_in(path);
    try {
        return load_dataset(in, config);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void save_dataset(const BanditDataset& data, const std::filesystem::path& sidecar) {
    auto csv_path = sidecar;
    csv_path.replace_extension(".csv");

    json j = {{"records", csv_path.filename().string()},
              {"contexts", support_json(*data.contexts)},
              {"actions", data.actions},
              {"xi_support", support_json(*data.xi_support)},
              {"y_max", data.y_max}};
    if (data.behavior_policy) j["behavior_policy"] = data.behavior_policy->probs;
    if (data.cost_model) {
        const auto& m = *data.cost_model;
        j["cost_model"] = {{"xi_support", support_json(*m.xi_support)}, {"y", m.y}, {"y_max", m.y_max}};
    }

    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw Error(ErrorKind::Io, "cannot write " + csv_path.string());
    csv << "context,action,xi,cost\n";
    for (const auto& r : data.records)
        csv << r.context << ',' << r.action << ',' << r.xi << ',' << format_real(r.cost) << '\n';
    std::ofstream side(sidecar, std::ios::binary);
    if (!side) throw Error(ErrorKind::Io, "cannot write " + sidecar.string());
    side << j.dump(2) << '\n';
    if (!csv || !side) throw Error(ErrorKind::Io, "write failed for " + sidecar.string());
}

BanditDataset load_canonical(const std::filesystem::path& sidecar) {
    json j = read_json(sidecar);
    try {
        auto contexts = support_from(j.at("contexts"));
        auto xi_support = support_from(j.at("xi_support"));
        auto actions = j.at("actions").get<std::vector<std::string>>();
        double y_max = j.at("y_max").get<double>();
        std::optional<Policy> behavior;
        if (j.contains("behavior_policy"))
            behavior = make_policy(j.at("behavior_policy").get<std::vector<std::vector<double>>>());
        std::optional<CostModel> model;
        if (j.contains("cost_model")) {
            const auto& m = j.at("cost_model");
            model = make_cost_model(support_from(m.at("xi_support")), contexts->size(), actions.size(),
                                    m.at("y").get<std::vector<double>>(), m.at("y_max").get<double>());
        }

        auto csv_path = sidecar.parent_path() / j.at("records").get<std::string>();
        auto in = open_in(csv_path);
        auto rows = parse_csv(in);
        if (rows.empty() || rows.front().fields != std::vector<std::string>{"context", "action", "xi", "cost"})
            throw Error(ErrorKind::SchemaMismatch, csv_path.string() + ": expected header context,action,xi,cost");
        std::vector<Record> records;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& f = rows[r].fields;
            if (f.size() != 4) bad_row(rows[r].line, "expected 4 fields");
            auto x = parse_index(f[0]), a = parse_index(f[1]), xi = parse_index(f[2]);
            auto c = parse_real(f[3]);
            if (!x || !a || !xi || !c) bad_row(rows[r].line, "malformed record");
            records.push_back({*x, *a, *xi, *c});
        }
        if (records.empty()) throw Error(ErrorKind::EmptyDataset, csv_path.string() + ": no records");
        return make_dataset(contexts, std::move(actions), xi_support, std::move(records), y_max, std::move(behavior),
                            std::move(model));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, sidecar.string() + ": " + e.what());
    }
}

BanditDataset read_dataset(const std::filesystem::path& path, const std::optional<IngestConfig>& config) {
    if (path.extension() == ".json") return load_canonical(path);
    if (!config) throw Error(ErrorKind::InvalidConfig, "raw CSV input needs --config");
    return load_dataset(path, *config);
}

DiscreteDistribution load_distribution_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    auto rows = parse_csv(in);
    if (rows.empty()) throw Error(ErrorKind::EmptyDataset, path.string() + ": empty file");
    const auto& header = rows.front().fields;
    if (header.size() < 2 || lower(trim(header.back())) != "weight")
        throw Error(ErrorKind::SchemaMismatch, path.string() + ": expected coordinate columns then 'weight'");
    const std::size_t dim = header.size() - 1;
    std::vector<Point> pts;
    std::vector<double> w;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != header.size()) bad_row(rows[r].line, "wrong field count");
        Point p(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            auto v = parse_real(f[k]);
            if (!v) bad_row(rows[r].line, "cannot read coordinate '" + f[k] + "'");
            p[k] = *v;
        }
        auto v = parse_real(f[dim]);
        if (!v) bad_row(rows[r].line, "cannot read weight '" + f[dim] + "'");
        pts.push_back(std::move(p));
        w.push_back(*v);
    }
    if (pts.empty()) throw Error(ErrorKind::EmptyDataset, path.string() + ": no points");
    return make_distribution(make_support(std::move(pts), dim), std::move(w), Normalization::Rescale);
}

}  // namespace wdro
