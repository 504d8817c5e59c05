#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dynalg/scenario.hpp"

namespace dynalg::scenario {

// Sectioned key-value configs with typed functional literals, e.g.
//
//   [scenario]
//   id = demo
//   kind = weyl
//   seed = 7
//
//   [functional F1]
//   linear = bump(center=0.5, halfwidth=1.2, amplitude=1.0, component=0)
//   potential = gaussian(v=0.2, c=0.0, w=1.0) * bump(center=-0.4, halfwidth=0.6, amplitude=1.0)
//   constant = 0.25
//
//   [chain]
//   interaction = gaussian(v=0.25, c=0.0, w=1.1)
//   level = (-0.45, 0.45) in (-0.75, 0.75)
//
// No code execution; diagnostics carry file:line and the offending key.

namespace detail_cfg {

struct Cursor {
    std::string text;
    std::size_t pos = 0;
    std::string where;  // "file:line" for diagnostics

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c, const std::string& what) {
        if (!eat(c))
            throw ParseError(where + ": expected '" + std::string(1, c) + "' in " + what);
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos) throw ParseError(where + ": expected identifier");
        return text.substr(start, pos - start);
    }
    double number(const std::string& what) {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && (std::isdigit(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '+' || text[pos] == '-' || text[pos] == '.' ||
                                     text[pos] == 'e' || text[pos] == 'E'))
            ++pos;
        try {
            std::size_t used = 0;
            double v = std::stod(text.substr(start, pos - start), &used);
            if (used != pos - start) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ParseError(where + ": malformed number in " + what);
        }
    }
    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }
};

struct CallArgs {
    std::string name;
    std::vector<std::pair<std::string, double>> args;

    double get(const Cursor& cur, const std::string& key) const {
        for (const auto& [k, v] : args)
            if (k == key) return v;
        throw ParseError(cur.where + ": literal '" + name + "' is missing argument '" + key +
                         "'");
    }
    double get_or(const std::string& key, double fallback) const {
        for (const auto& [k, v] : args)
            if (k == key) return v;
        return fallback;
    }
};

inline CallArgs parse_call(Cursor& cur) {
    CallArgs call;
    call.name = cur.ident();
    cur.expect('(', "literal " + call.name);
    if (!cur.eat(')')) {
        while (true) {
            std::string key = cur.ident();
            cur.expect('=', "argument " + key);
            call.args.emplace_back(key, cur.number("argument " + key));
            if (cur.eat(')')) break;
            cur.expect(',', "argument list of " + call.name);
        }
    }
    return call;
}

inline TimeFunction bump_literal(const Cursor& cur, const CallArgs& call, const TimeGrid& grid,
                                 std::size_t components) {
    if (call.name != "bump")
        throw ParseError(cur.where + ": expected a bump(...) literal, got '" + call.name + "'");
    return make_bump(grid, call.get(cur, "center"), call.get(cur, "halfwidth"),
                     call.get_or("amplitude", 1.0),
                     static_cast<std::size_t>(call.get_or("component", 0.0)), components);
}

inline Potential potential_literal(const Cursor& cur, const CallArgs& call, std::size_t d) {
    if (call.name == "gaussian")
        return Potential::gaussian(call.get(cur, "v"), std::vector<double>(d, call.get(cur, "c")),
                                   call.get(cur, "w"));
    if (call.name == "cosine")
        return Potential::cosine(call.get(cur, "v"), std::vector<double>(d, call.get(cur, "k")),
                                 call.get_or("phi", 0.0));
    if (call.name == "sech2")
        return Potential::sech2(call.get(cur, "v"), std::vector<double>(d, call.get(cur, "c")),
                                call.get(cur, "w"));
    throw ParseError(cur.where + ": unknown catalog entry '" + call.name +
                     "' (expected gaussian|cosine|sech2)");
}

}  // namespace detail_cfg

// Parse "(a, b) in (c, d)" interval-pair syntax for chain levels.
inline std::pair<Support, Support> parse_level(detail_cfg::Cursor& cur) {
    cur.expect('(', "inner interval");
    double a = cur.number("interval bound");
    cur.expect(',', "inner interval");
    double b = cur.number("interval bound");
    cur.expect(')', "inner interval");
    std::string kw = cur.ident();
    if (kw != "in") throw ParseError(cur.where + ": expected 'in' between intervals");
    cur.expect('(', "outer interval");
    double c = cur.number("interval bound");
    cur.expect(',', "outer interval");
    double d = cur.number("interval bound");
    cur.expect(')', "outer interval");
    return {Support::make(a, b), Support::make(c, d)};
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& filename);

inline ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

inline ScenarioConfig parse_config_text(const std::string& text, const std::string& filename) {
    ScenarioConfig cfg;
    cfg.kind = "all";
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::string section;
    std::string section_arg;
    // deferred functional assembly: build after [grid] is known
    struct PendingFunctional {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;  // key, literal text
        std::vector<std::string> wheres;
    };
    std::vector<PendingFunctional> pending;
    std::vector<std::pair<std::string, std::string>> chain_entries;  // key, text (+where)
    std::vector<std::string> chain_wheres;

    auto where = [&]() { return filename + ":" + std::to_string(lineno); };

    while (std::getline(in, line)) {
        ++lineno;
        std::string s = line;
        if (auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
        auto notspace = [](unsigned char c) { return !std::isspace(c); };
        s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
        s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(where() + ": unterminated section header");
            std::string inside = s.substr(1, s.size() - 2);
            std::istringstream hs(inside);
            hs >> section;
            section_arg.clear();
            hs >> section_arg;
            if (section == "functional") {
                if (section_arg.empty())
                    throw ParseError(where() + ": functional section needs a name");
                pending.push_back({section_arg, {}, {}});
            } else if (section != "scenario" && section != "grid" && section != "rep" &&
                       section != "chain") {
                throw ParseError(where() + ": unknown section '" + section + "'");
            }
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError(where() + ": expected 'key = value', got '" + s + "'");
        std::string key = s.substr(0, eq);
        std::string val = s.substr(eq + 1);
        key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
        val.erase(val.begin(), std::find_if(val.begin(), val.end(), notspace));
        if (key.empty()) throw ParseError(where() + ": empty key");

        auto num = [&](const std::string& what) {
            try {
                std::size_t used = 0;
                double v = std::stod(val, &used);
                while (used < val.size() && std::isspace(static_cast<unsigned char>(val[used])))
                    ++used;
                if (used != val.size()) throw std::invalid_argument("trailing");
                return v;
            } catch (const std::exception&) {
                throw ParseError(where() + ": malformed number for key '" + what + "'");
            }
        };

        if (section == "scenario") {
            if (key == "id") cfg.id = val;
            else if (key == "kind") cfg.kind = val;
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(num(key));
            else if (key == "tolerance_scale") cfg.tolerance_scale = num(key);
            else throw ParseError(where() + ": unknown key '" + key + "' in [scenario]");
        } else if (section == "grid") {
            if (key == "t_min") cfg.grid.t_min = num(key);
            else if (key == "t_max") cfg.grid.t_max = num(key);
            else if (key == "points") cfg.grid.points = static_cast<std::size_t>(num(key));
            else throw ParseError(where() + ": unknown key '" + key + "' in [grid]");
        } else if (section == "rep") {
            if (key == "box") cfg.rep.box = num(key);
            else if (key == "points") cfg.rep.points = static_cast<std::size_t>(num(key));
            else if (key == "k_track") cfg.rep.k_track = static_cast<std::size_t>(num(key));
            else if (key == "dof") cfg.rep.dof = static_cast<std::size_t>(num(key));
            else throw ParseError(where() + ": unknown key '" + key + "' in [rep]");
        } else if (section == "functional") {
            if (key != "linear" && key != "potential" && key != "constant" &&
                key != "expect_phase" && key != "expect_moment_a" && key != "expect_moment_b")
                throw ParseError(where() + ": unknown key '" + key + "' in [functional]");
            pending.back().entries.emplace_back(key, val);
            pending.back().wheres.push_back(where());
        } else if (section == "chain") {
            if (key != "interaction" && key != "level")
                throw ParseError(where() + ": unknown key '" + key + "' in [chain]");
            chain_entries.emplace_back(key, val);
            chain_wheres.push_back(where());
        } else {
            throw ParseError(where() + ": key '" + key + "' outside any section");
        }
    }

    TimeGrid grid = cfg.grid.build();
    std::size_t d = cfg.rep.dof;
    for (const auto& pf : pending) {
        Functional F(grid, d);
        ExpectedValues expected;
        double constant = 0.0;
        for (std::size_t e = 0; e < pf.entries.size(); ++e) {
            const auto& [key, val] = pf.entries[e];
            detail_cfg::Cursor cur{val, 0, pf.wheres[e]};
            if (key == "linear") {
                auto call = detail_cfg::parse_call(cur);
                TimeFunction piece = detail_cfg::bump_literal(cur, call, grid, d);
                if (F.linear_part()) piece = add(piece, *F.linear_part());
                F.set_linear(piece);
            } else if (key == "potential") {
                auto pot_call = detail_cfg::parse_call(cur);
                Potential pot = detail_cfg::potential_literal(cur, pot_call, d);
                cur.expect('*', "potential term (need V * window)");
                auto win_call = detail_cfg::parse_call(cur);
                TimeFunction window = detail_cfg::bump_literal(cur, win_call, grid, 1);
                F.add_potential(PotentialTerm{std::move(window), std::move(pot), std::nullopt});
            } else if (key == "constant") {
                constant += cur.number("constant");
            } else if (key == "expect_phase") {
                expected.phase = cur.number(key);
            } else if (key == "expect_moment_a") {
                expected.moment_a = cur.number(key);
            } else {
                expected.moment_b = cur.number(key);
            }
            if (!cur.at_end())
                throw ParseError(cur.where + ": trailing characters after value for '" + key +
                                 "'");
        }
        F.set_constant(constant);
        cfg.functionals.push_back(NamedFunctional{pf.name, std::move(F), expected});
    }
    if (!chain_entries.empty()) {
        ChainSpec spec;
        for (std::size_t e = 0; e < chain_entries.size(); ++e) {
            const auto& [key, val] = chain_entries[e];
            detail_cfg::Cursor cur{val, 0, chain_wheres[e]};
            if (key == "interaction") {
                auto call = detail_cfg::parse_call(cur);
                spec.interaction = detail_cfg::potential_literal(cur, call, d);
            } else {
                spec.levels.push_back(parse_level(cur));
            }
            if (!cur.at_end())
                throw ParseError(cur.where + ": trailing characters after value for '" + key +
                                 "'");
        }
        cfg.chain = std::move(spec);
    }
    return cfg;
}

}  // namespace dynalg::scenario
