#include "orlog/trec.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace orlog {

std::vector<RunLine> read_run(std::istream& in) {
    std::vector<RunLine> lines;
    std::string text;
    std::size_t lineno = 0;
    while (std::getline(in, text)) {
        ++lineno;
        if (text.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(text);
        std::array<std::string, 6> col;
        std::size_t n = 0;
        std::string token;
        while (fields >> token) {
            if (n == col.size()) {
                throw MalformedRunLine(lineno, "more than 6 columns");
            }
            col[n++] = std::move(token);
        }
        if (n != col.size()) {
            throw MalformedRunLine(lineno, "expected 6 columns, got " + std::to_string(n));
        }
        RunLine line;
        line.qid = col[0];
        line.entity_id = col[2];
        line.tag = col[5];
        try {
            std::size_t used = 0;
            line.rank = std::stol(col[3], &used);
            if (used != col[3].size()) {
                throw std::invalid_argument(col[3]);
            }
            line.score = std::stod(col[4], &used);
            if (used != col[4].size() || !std::isfinite(line.score)) {
                throw std::invalid_argument(col[4]);
            }
        } catch (const std::exception&) {
            throw MalformedRunLine(lineno, "rank/score not numeric");
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<RunLine> read_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open run file " + path.string());
    }
    return read_run(in);
}

void write_run_line(std::ostream& out, const RunLine& line) {
    char score[32];
    std::snprintf(score, sizeof score, "%.17g", line.score);
    out << line.qid << " Q0 " << line.entity_id << ' ' << line.rank << ' ' << score << ' '
        << line.tag << '\n';
}

}  // namespace orlog
