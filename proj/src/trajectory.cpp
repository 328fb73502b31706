#include "geomkit/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace geomkit {

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

std::string Trajectory::to_csv() const {
    std::string out = "t";
    for (int j = 0; j < states.cols; ++j) out += ",s" + std::to_string(j);
    out += "\n";
    for (int i = 0; i < states.rows; ++i) {
        append_double(out, times[i]);
        for (int j = 0; j < states.cols; ++j) {
            out += ',';
            append_double(out, states(i, j));
        }
        out += "\n";
    }
    return out;
}

std::string Trajectory::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["times"] = times;
    j["state_dim"] = states.cols;
    auto rows = nlohmann::json::array();
    for (int i = 0; i < states.rows; ++i) rows.push_back(states.row(i));
    j["states"] = std::move(rows);
    return j.dump();
}

Trajectory Trajectory::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Trajectory t;
    t.times = j.at("times").get<Vec>();
    const auto& rows = j.at("states");
    const int dim = j.at("state_dim").get<int>();
    t.states = Matrix(static_cast<int>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = rows[i].get<Vec>();
        if (static_cast<int>(row.size()) != dim)
            throw std::invalid_argument("Trajectory::from_json: ragged state rows");
        for (int k = 0; k < dim; ++k) t.states(static_cast<int>(i), k) = row[k];
    }
    if (t.times.size() != static_cast<std::size_t>(t.states.rows))
        throw std::invalid_argument("Trajectory::from_json: times/states length mismatch");
    return t;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void Trajectory::write_csv(const std::string& path) const { write_text_file(path, to_csv()); }
void Trajectory::write_json(const std::string& path) const { write_text_file(path, to_json()); }
Trajectory Trajectory::read_json(const std::string& path) { return from_json(read_text_file(path)); }

}  // namespace geomkit
