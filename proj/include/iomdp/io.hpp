#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "iomdp/error.hpp"
#include "iomdp/mdp.hpp"
#include "iomdp/truncation.hpp"

namespace iomdp {

/// Shortest decimal text that parses back to exactly `x`.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw InvalidArgument("format_double: conversion failed");
    return {buf, ptr};
}

[[nodiscard]] inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read error on '" + path.string() + "'");
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write error on '" + path.string() + "'");
}

// Instance files

/// JSON document with fields in canonical order: num_states, num_actions,
/// beta, transitions[a][from][to], rewards[s][a], and initial when set.
/// One transition row per line, so the output is byte-stable and diffable.
[[nodiscard]] inline std::string spec_to_json(const MdpSpec& spec) {
    auto row_text = [](auto begin, auto end) {
        std::string out = "[";
        for (auto it = begin; it != end; ++it) {
            if (it != begin) out += ", ";
            out += format_double(*it);
        }
        return out + "]";
    };
    const std::size_t ns = spec.num_states;
    const std::size_t na = spec.num_actions;
    std::string out = "{\n";
    out += "  \"num_states\": " + std::to_string(ns) + ",\n";
    out += "  \"num_actions\": " + std::to_string(na) + ",\n";
    out += "  \"beta\": " + format_double(spec.beta) + ",\n";
    out += "  \"transitions\": [\n";
    for (std::size_t a = 0; a < na; ++a) {
        out += "    [\n";
        for (std::size_t i = 0; i < ns; ++i) {
            const auto r = spec.row(static_cast<ActionIndex>(a), static_cast<StateIndex>(i));
            out += "      " + row_text(r.begin(), r.end()) + (i + 1 < ns ? ",\n" : "\n");
        }
        out += (a + 1 < na ? "    ],\n" : "    ]\n");
    }
    out += "  ],\n";
    out += "  \"rewards\": [\n";
    for (std::size_t s = 0; s < ns; ++s) {
        const auto first = spec.rewards.begin() + static_cast<std::ptrdiff_t>(s * na);
        out += "    " + row_text(first, first + static_cast<std::ptrdiff_t>(na)) + (s + 1 < ns ? ",\n" : "\n");
    }
    out += "  ]";
    if (!spec.initial.empty()) out += ",\n  \"initial\": " + row_text(spec.initial.begin(), spec.initial.end());
    out += "\n}\n";
    return out;
}

/// Parses an instance document; shape errors name the offending field.
/// The result is not validated beyond its dimensions.
[[nodiscard]] inline MdpSpec spec_from_json(const std::string& text, const std::string& origin = "<input>") {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(origin + ": not a valid JSON document: " + e.what());
    }
    auto fail = [&](const std::string& msg) { return InvalidArgument(origin + ": " + msg); };
    if (!doc.is_object()) throw fail("top level must be an object");
    for (const char* key : {"num_states", "num_actions", "beta", "transitions", "rewards"}) {
        if (!doc.contains(key)) throw fail(std::string("missing field '") + key + "'");
    }
    auto number = [&](const json& v, const std::string& where) {
        if (!v.is_number()) throw fail(where + " must be a number");
        return v.get<double>();
    };
    auto count = [&](const char* key) {
        const json& v = doc.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw fail(std::string(key) + " must be a non-negative integer");
        }
        return v.get<std::size_t>();
    };

    MdpSpec spec;
    spec.num_states = count("num_states");
    spec.num_actions = count("num_actions");
    spec.beta = number(doc.at("beta"), "beta");
    const std::size_t ns = spec.num_states;
    const std::size_t na = spec.num_actions;

    const json& tr = doc.at("transitions");
    if (!tr.is_array() || tr.size() != na) throw fail("transitions must hold num_actions matrices");
    spec.transitions.reserve(na * ns * ns);
    for (std::size_t a = 0; a < na; ++a) {
        if (!tr[a].is_array() || tr[a].size() != ns) {
            throw fail("transitions[" + std::to_string(a) + "] must hold num_states rows");
        }
        for (std::size_t i = 0; i < ns; ++i) {
            const json& row = tr[a][i];
            const std::string where = "transitions[" + std::to_string(a) + "][" + std::to_string(i) + "]";
            if (!row.is_array() || row.size() != ns) throw fail(where + " must hold num_states entries");
            for (std::size_t j = 0; j < ns; ++j) spec.transitions.push_back(number(row[j], where));
        }
    }

    const json& rw = doc.at("rewards");
    if (!rw.is_array() || rw.size() != ns) throw fail("rewards must hold num_states rows");
    spec.rewards.reserve(ns * na);
    for (std::size_t s = 0; s < ns; ++s) {
        const std::string where = "rewards[" + std::to_string(s) + "]";
        if (!rw[s].is_array() || rw[s].size() != na) throw fail(where + " must hold num_actions entries");
        for (std::size_t a = 0; a < na; ++a) spec.rewards.push_back(number(rw[s][a], where));
    }

    if (doc.contains("initial")) {
        const json& init = doc.at("initial");
        if (!init.is_array() || init.size() != ns) throw fail("initial must hold num_states entries");
        for (const auto& x : init) spec.initial.push_back(number(x, "initial"));
    }
    return spec;
}

[[nodiscard]] inline MdpSpec load_spec(const std::filesystem::path& path) {
    return spec_from_json(read_text_file(path), path.string());
}

inline void save_spec(const std::filesystem::path& path, const MdpSpec& spec) {
    write_text_file(path, spec_to_json(spec));
}

// Policy files
//
//   # iomdp policy
//   kind ta
//   L 2
//   n 0
//   rho 0.9
//   beta 0.95
//   num_states 9
//   num_actions 4
//   records 189
//   history layer action
//   0 0 0
//   0:1 1 2
//   ...
//
// Records follow the node-table order, parents before children.

[[nodiscard]] inline std::string policy_to_text(const Policy& policy) {
    std::string out = "# iomdp policy\n";
    out += "kind " + to_string(policy.shape().kind) + "\n";
    out += "L " + std::to_string(policy.shape().L) + "\n";
    out += "n " + std::to_string(policy.shape().n) + "\n";
    out += "rho " + format_double(policy.rho()) + "\n";
    out += "beta " + format_double(policy.beta()) + "\n";
    out += "num_states " + std::to_string(policy.num_roots()) + "\n";
    out += "num_actions " + std::to_string(policy.num_actions()) + "\n";
    out += "records " + std::to_string(policy.size()) + "\n";
    out += "history layer action\n";
    const auto& nodes = policy.nodes();
    for (std::size_t i = 0; i < policy.size(); ++i) {
        out += to_string(nodes.history(i)) + " " + std::to_string(nodes.layer(i)) + " " +
               std::to_string(policy.action(i)) + "\n";
    }
    return out;
}

[[nodiscard]] inline Policy policy_from_text(const std::string& text, const std::string& origin = "<input>") {
    std::istringstream in(text);
    auto fail = [&](const std::string& msg) { return InvalidArgument(origin + ": " + msg); };
    std::string line;
    if (!std::getline(in, line) || line != "# iomdp policy") throw fail("missing '# iomdp policy' header");
    auto field = [&](const std::string& key) {
        if (!std::getline(in, line)) throw fail("truncated header, expected '" + key + "'");
        std::istringstream ls(line);
        std::string k, v;
        if (!(ls >> k >> v) || k != key) throw fail("expected '" + key + " <value>', got '" + line + "'");
        return v;
    };
    auto to_size = [&](const std::string& v) {
        std::size_t x = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc{} || ptr != v.data() + v.size()) throw fail("bad integer '" + v + "'");
        return x;
    };
    auto to_real = [&](const std::string& v) {
        double x = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc{} || ptr != v.data() + v.size()) throw fail("bad number '" + v + "'");
        return x;
    };

    ModelShape shape;
    const std::string kind = field("kind");
    if (kind == "ta") {
        shape.kind = ModelKind::truncated;
    } else if (kind == "hota") {
        shape.kind = ModelKind::high_order;
    } else {
        throw fail("unknown kind '" + kind + "'");
    }
    shape.L = to_size(field("L"));
    shape.n = to_size(field("n"));
    const double rho = to_real(field("rho"));
    const double beta = to_real(field("beta"));
    const std::size_t ns = to_size(field("num_states"));
    const std::size_t na = to_size(field("num_actions"));
    const std::size_t records = to_size(field("records"));
    if (!std::getline(in, line) || line != "history layer action") throw fail("missing column header");
    if (records < ns) throw fail("fewer records than root states");

    NodeTable nodes(ns, na);
    std::vector<ActionIndex> actions(records);
    for (std::size_t r = 0; r < records; ++r) {
        if (!std::getline(in, line)) throw fail("expected " + std::to_string(records) + " records");
        std::istringstream ls(line);
        std::string hid, layer_text, action_text;
        if (!(ls >> hid >> layer_text >> action_text)) throw fail("malformed record '" + line + "'");
        const History h = parse_history(hid);
        if (h.root >= ns) throw fail("record root out of range: " + hid);
        if (to_size(layer_text) != h.layer()) throw fail("layer disagrees with history " + hid);
        std::size_t idx = h.root;
        if (h.is_root()) {
            if (r != h.root) throw fail("root records must come first, in order");
        } else {
            const auto p = nodes.find(parent(h));
            if (!p) throw fail("record " + hid + " precedes its parent");
            if (h.actions.back() >= na) throw fail("record action out of range: " + hid);
            idx = nodes.add_child(*p, h.actions.back());
            if (idx != r) throw fail("records out of node-table order at " + hid);
        }
        const std::size_t a = to_size(action_text);
        if (a >= na) throw fail("action out of range in record " + hid);
        actions[idx] = static_cast<ActionIndex>(a);
    }
    return Policy(std::move(nodes), std::move(actions), shape, rho, beta);
}

inline void save_policy(const std::filesystem::path& path, const Policy& policy) {
    write_text_file(path, policy_to_text(policy));
}

[[nodiscard]] inline Policy load_policy(const std::filesystem::path& path) {
    return policy_from_text(read_text_file(path), path.string());
}

// CSV

/// In-memory CSV table; cells are pre-formatted text.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    template <class... Cells>
    void add(const Cells&... cells) {
        rows.push_back({cell(cells)...});
    }

    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double x) { return format_double(x); }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    template <class T>
        requires std::is_integral_v<T>
    static std::string cell(T x) {
        return std::to_string(x);
    }
};

[[nodiscard]] inline std::string to_csv(const CsvTable& table) {
    auto join = [](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        return out + "\n";
    };
    std::string out = join(table.header);
    for (const auto& row : table.rows) out += join(row);
    return out;
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    write_text_file(path, to_csv(table));
}

}  // namespace iomdp
