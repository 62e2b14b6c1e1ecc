#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace alifs {

enum class CheckStatus { Pass, Fail, NotCovered, Skipped, Error };

const char* check_status_name(CheckStatus s);

struct CheckResult {
    std::string name;
    bool required = false;
    CheckStatus status = CheckStatus::Skipped;
    Json measured;
    std::string tolerance;
    std::string detail;
};

Json check_to_json(const CheckResult& c);

struct CommandResult {
    Json report;
    int exit_code = 0;
    std::vector<CheckResult> checks;  // filled by verify and report
};

// Classification, spectral summary, roots, drift, degeneracy, existence and lattice.
Json analysis_section(const RunConfig& cfg);

CommandResult cmd_analyze(const RunConfig& cfg, bool write = true);
CommandResult cmd_simulate(const RunConfig& cfg, bool write = true);
CommandResult cmd_verify(const RunConfig& cfg, bool write = true);
CommandResult cmd_report(const RunConfig& cfg, bool write = true);

// Pretty-printed JSON with a trailing newline.
std::string dump_report(const Json& j);

void write_text_file(const std::string& path, const std::string& text);
void write_samples_bin(const std::string& path, const std::vector<double>& samples);
std::vector<double> read_samples_bin(const std::string& path);

}  // namespace alifs
