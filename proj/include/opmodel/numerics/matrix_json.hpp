#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "opmodel/errors.hpp"
#include "opmodel/numerics/matrix.hpp"

namespace opmodel {

/// Raised for unreadable or malformed input files.
class IoError : public Error {
public:
    using Error::Error;
};

// Matrix JSON: {"rows":r,"cols":c,"data":[[re,im],...]} row-major.  Doubles are
// written with shortest round-trip formatting, so write/read is bit exact.

inline nlohmann::json matrix_to_json(const ComplexMatrix& m) {
    nlohmann::json data = nlohmann::json::array();
    for (const auto& z : m.data()) data.push_back({z.real(), z.imag()});
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline ComplexMatrix matrix_from_json(const nlohmann::json& j) {
    try {
        const auto rows = j.at("rows").get<std::size_t>();
        const auto cols = j.at("cols").get<std::size_t>();
        const auto& data = j.at("data");
        if (!data.is_array() || data.size() != rows * cols) {
            throw IoError("matrix JSON: data length does not equal rows*cols");
        }
        std::vector<Complex> entries;
        entries.reserve(data.size());
        for (const auto& e : data) {
            if (!e.is_array() || e.size() != 2) throw IoError("matrix JSON: entries must be [re, im]");
            entries.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
        ComplexMatrix m(rows, cols, std::move(entries));
        if (!m.all_finite()) throw IoError("matrix JSON: non-finite entry");
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("matrix JSON: ") + ex.what());
    }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw IoError("cannot parse " + path.string() + ": " + ex.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace opmodel
