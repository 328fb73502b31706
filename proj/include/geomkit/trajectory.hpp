#pragma once
// Time series produced by the integrators, plus file round-tripping.
// CSV is for plotting (header t,s0,s1,...); JSON preserves every double
// bit-exactly and is the format the tools read back.

#include <string>

#include "geomkit/linalg.hpp"

namespace geomkit {

struct Trajectory {
    Vec times;       // n_steps + 1 entries
    Matrix states;   // (n_steps + 1) x state_dim

    int n_states() const { return states.rows; }
    int state_dim() const { return states.cols; }
    Vec state(int i) const { return states.row(i); }
    Vec back() const { return states.row(states.rows - 1); }

    std::string to_csv() const;
    std::string to_json() const;
    static Trajectory from_json(const std::string& text);

    void write_csv(const std::string& path) const;
    void write_json(const std::string& path) const;
    static Trajectory read_json(const std::string& path);
};

// Shared helpers for the command line tools.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace geomkit
