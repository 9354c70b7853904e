#include "jcc/error.hpp"
#include "jcc/netcase.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace jcc::netcase {
namespace {

struct Row {
    std::vector<double> values;
    std::size_t line;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_comment(std::string_view s) {
    // '%' starts a comment unless it sits inside a quoted string, which the format only uses for version.
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\'') quoted = !quoted;
        if (!quoted && (s[i] == '%' || s[i] == '#')) return s.substr(0, i);
    }
    return s;
}

double parse_number(std::string_view tok, std::size_t line) {
    std::string lower;
    for (char c : tok) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "inf" || lower == "+inf") return std::numeric_limits<double>::infinity();
    if (lower == "-inf") return -std::numeric_limits<double>::infinity();
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
        throw ParseError("invalid number '" + std::string(tok) + "'", line);
    }
    return value;
}

void parse_rows(std::string_view content, std::size_t line, std::vector<Row>& out) {
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t end = content.find(';', start);
        std::string_view piece = content.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        piece = trim(piece);
        if (!piece.empty()) {
            Row row{{}, line};
            std::size_t i = 0;
            while (i < piece.size()) {
                while (i < piece.size() && (std::isspace(static_cast<unsigned char>(piece[i])) || piece[i] == ',')) ++i;
                std::size_t j = i;
                while (j < piece.size() && !std::isspace(static_cast<unsigned char>(piece[j])) && piece[j] != ',') ++j;
                if (j > i) row.values.push_back(parse_number(piece.substr(i, j - i), line));
                i = j;
            }
            out.push_back(std::move(row));
        }
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
}

const Row& require_columns(const Row& row, std::size_t n, std::string_view block) {
    if (row.values.size() < n) {
        throw ParseError(std::string(block) + " row has " + std::to_string(row.values.size()) +
                             " columns, need at least " + std::to_string(n),
                         row.line);
    }
    return row;
}

int as_int(double v, std::size_t line, std::string_view what) {
    if (v != std::floor(v) || std::abs(v) > 1e9) {
        throw ParseError(std::string(what) + " must be an integer", line);
    }
    return static_cast<int>(v);
}

}  // namespace

Network parse_case(std::string_view text) {
    std::map<std::string, std::vector<Row>, std::less<>> blocks;
    std::optional<double> base_mva;
    std::string current;     // block being read, empty when outside
    bool in_cell = false;    // skipping a `{ ... }` cell array
    std::size_t block_line = 0;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;
        std::string_view line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (in_cell) {
            if (line.find('}') != std::string_view::npos) in_cell = false;
            continue;
        }
        if (!current.empty()) {
            std::size_t close = line.find(']');
            parse_rows(line.substr(0, close), line_no, blocks[current]);
            if (close != std::string_view::npos) current.clear();
            continue;
        }
        if (line.starts_with("function")) continue;
        if (!line.starts_with("mpc.")) {
            throw ParseError("unexpected statement '" + std::string(line) + "'", line_no);
        }
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected '=' in assignment", line_no);
        std::string name(trim(line.substr(4, eq - 4)));
        std::string_view rhs = trim(line.substr(eq + 1));
        if (rhs.starts_with('[')) {
            if (blocks.contains(name)) throw ParseError("duplicate block mpc." + name, line_no);
            blocks[name];
            rhs.remove_prefix(1);
            std::size_t close = rhs.find(']');
            parse_rows(rhs.substr(0, close), line_no, blocks[name]);
            if (close == std::string_view::npos) {
                current = name;
                block_line = line_no;
            }
        } else if (rhs.starts_with('{')) {
            in_cell = rhs.find('}') == std::string_view::npos;
        } else {
            if (rhs.ends_with(';')) rhs.remove_suffix(1);
            rhs = trim(rhs);
            if (name == "baseMVA") {
                base_mva = parse_number(rhs, line_no);
            } else if (name == "version") {
                if (rhs != "'2'" && rhs != "\"2\"" && rhs != "2") {
                    throw ParseError("unsupported case format version " + std::string(rhs), line_no);
                }
            }
        }
    }
    if (!current.empty()) throw ParseError("unterminated block mpc." + current, block_line);
    if (!base_mva) throw ParseError("missing mpc.baseMVA", 0);
    for (const char* required : {"bus", "gen", "branch", "gencost"}) {
        if (!blocks.contains(required)) throw ParseError(std::string("missing block mpc.") + required, 0);
    }

    Network net;
    net.base_mva = *base_mva;

    std::size_t ref_count = 0;
    for (const Row& row : blocks["bus"]) {
        require_columns(row, 3, "bus");
        Bus bus;
        bus.id = as_int(row.values[0], row.line, "bus id");
        int type = as_int(row.values[1], row.line, "bus type");
        if (type < 1 || type > 3) throw ParseError("unsupported bus type " + std::to_string(type), row.line);
        bus.kind = static_cast<BusKind>(type);
        bus.pd_mean = row.values[2];
        if (bus.kind == BusKind::Ref) {
            if (ref_count++ == 0) net.ref_bus = bus.id;
        }
        net.buses.push_back(bus);
    }

    for (const Row& row : blocks["branch"]) {
        require_columns(row, 11, "branch");
        Branch br;
        br.from_bus = as_int(row.values[0], row.line, "from bus");
        br.to_bus = as_int(row.values[1], row.line, "to bus");
        br.reactance_pu = row.values[3];
        double rate = row.values[5];
        br.flow_limit = (rate == 0.0) ? std::numeric_limits<double>::infinity() : rate;
        br.in_service = row.values[10] > 0.0;
        net.branches.push_back(br);
    }

    const auto& gen_rows = blocks["gen"];
    const auto& cost_rows = blocks["gencost"];
    if (cost_rows.size() != gen_rows.size()) {
        throw ParseError("gencost has " + std::to_string(cost_rows.size()) + " rows but gen has " +
                             std::to_string(gen_rows.size()),
                         cost_rows.empty() ? 0 : cost_rows.front().line);
    }
    for (std::size_t g = 0; g < gen_rows.size(); ++g) {
        const Row& row = require_columns(gen_rows[g], 10, "gen");
        const Row& cost = require_columns(cost_rows[g], 4, "gencost");
        int model = as_int(cost.values[0], cost.line, "cost model");
        if (model != 2) throw ParseError("only polynomial cost rows (model 2) are supported", cost.line);
        int ncoef = as_int(cost.values[3], cost.line, "cost coefficient count");
        if (ncoef < 2 || ncoef > 3) {
            throw ParseError("cost polynomial must have 2 or 3 coefficients, got " + std::to_string(ncoef), cost.line);
        }
        require_columns(cost, 4 + static_cast<std::size_t>(ncoef), "gencost");
        if (row.values[7] <= 0.0) continue;  // out of service

        Generator gen;
        gen.bus = as_int(row.values[0], row.line, "generator bus");
        gen.p_max = row.values[8];
        gen.p_min = row.values[9];
        if (ncoef == 3) {
            gen.cost = {cost.values[4], cost.values[5], cost.values[6]};
        } else {
            gen.cost = {0.0, cost.values[4], cost.values[5]};
        }
        net.generators.push_back(gen);
    }

    auto violations = validate(net);
    if (!violations.empty()) {
        std::string msg = "invalid network:";
        for (const auto& v : violations) msg += " [" + std::string(to_string(v.code)) + "] " + v.detail + ";";
        throw DataError(msg);
    }
    return net;
}

Network load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open case file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_case(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
}

}  // namespace jcc::netcase
