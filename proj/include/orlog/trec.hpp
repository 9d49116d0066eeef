#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace orlog {

/// One line of a TREC run: `qid Q0 entity_id rank score tag`.
struct RunLine {
    std::string qid;
    std::string entity_id;
    long rank = 0;
    double score = 0.0;
    std::string tag;
};

class MalformedRunLine : public std::runtime_error {
  public:
    MalformedRunLine(std::size_t line, const std::string& why)
        : std::runtime_error("run line " + std::to_string(line) + ": " + why), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

std::vector<RunLine> read_run(std::istream& in);
std::vector<RunLine> read_run(const std::filesystem::path& path);

/// Formats scores with `%.17g` so that they round-trip exactly.
void write_run_line(std::ostream& out, const RunLine& line);

}  // namespace orlog
