#pragma once

// Operator JSON container {"dim": d, "data": [[re, im], ...]} (row-major) and
// CSV writers for field data.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nlqm/fock.hpp"

namespace nlqm {

using Json = nlohmann::json;

inline Json operator_to_json(const FockOperator& op) {
    Json data = Json::array();
    const Matrix& m = op.matrix();
    for (int r = 0; r < op.dim(); ++r)
        for (int c = 0; c < op.dim(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
    return Json{{"dim", op.dim()}, {"data", std::move(data)}};
}

inline FockOperator operator_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("data"))
        throw FileFormatError("operator container needs 'dim' and 'data'");
    if (!j["dim"].is_number_integer()) throw FileFormatError("'dim' must be an integer");
    const int dim = j["dim"].get<int>();
    const Json& data = j["data"];
    if (dim < 1 || !data.is_array() || data.size() != static_cast<std::size_t>(dim) * dim)
        throw FileFormatError("'data' must hold dim*dim [re, im] pairs");
    Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            const Json& e = data[static_cast<std::size_t>(r) * dim + c];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw FileFormatError("matrix entries must be [re, im] number pairs");
            m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
        }
    return FockOperator(std::move(m));
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

inline void save_operator(const FockOperator& op, const std::filesystem::path& path) {
    write_text(path, operator_to_json(op).dump() + "\n");
}

inline FockOperator load_operator(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw FileFormatError(path.string() + ": " + e.what());
    }
    return operator_from_json(j);
}

/// Shortest round-trip decimal form of a double.
inline std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

inline std::string wigner_csv(const WignerGrid& g) {
    std::ostringstream ss;
    ss << "x,p,W\n";
    for (std::size_t i = 0; i < g.xs.size(); ++i)
        for (std::size_t j = 0; j < g.ps.size(); ++j)
            ss << fmt(g.xs[i]) << ',' << fmt(g.ps[j]) << ','
               << fmt(g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
    return ss.str();
}

}  // namespace nlqm
