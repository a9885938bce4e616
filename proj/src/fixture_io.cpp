#include "blindpoly/fixture_io.hpp"

#include "blindpoly/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace blindpoly {

namespace {

void dump_into(const nlohmann::json& j, int indent, int depth, std::string& out) {
    using value_t = nlohmann::json::value_t;
    const bool pretty = indent >= 0;
    auto newline = [&](int d) {
        if (!pretty) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    // Arrays of scalars stay on one line.
    auto flat = [](const nlohmann::json& a) {
        for (const auto& e : a) {
            if (e.is_structured()) return false;
        }
        return true;
    };

    switch (j.type()) {
        case value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? fmt::format("{:.17g}", v) : "null";
            break;
        }
        case value_t::object: {
            if (j.empty()) {
                out += "{}";
                break;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                out += nlohmann::json(it.key()).dump();
                out += pretty ? ": " : ":";
                dump_into(it.value(), indent, depth + 1, out);
            }
            newline(depth);
            out += '}';
            break;
        }
        case value_t::array: {
            if (j.empty()) {
                out += "[]";
                break;
            }
            const bool one_line = flat(j);
            out += '[';
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += one_line && pretty ? ", " : ",";
                first = false;
                if (!one_line) newline(depth + 1);
                dump_into(e, indent, depth + 1, out);
            }
            if (!one_line) newline(depth);
            out += ']';
            break;
        }
        default:
            out += j.dump();
    }
}

const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) {
        throw InvalidInput(fmt::format("fixture is missing field '{}'", key));
    }
    return doc.at(key);
}

}  // namespace

std::string dump_json(const nlohmann::json& doc, int indent) {
    std::string out;
    dump_into(doc, indent, 0, out);
    if (indent >= 0) out += '\n';
    return out;
}

nlohmann::json vector_to_json(const Vector& v) {
    auto j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    auto j = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vector_to_json(m.row(r).transpose()));
    return j;
}

Vector vector_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw InvalidInput("expected a JSON array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InvalidInput("expected a JSON array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw InvalidInput("expected a non-empty JSON array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Vector row = vector_from_json(j[static_cast<std::size_t>(r)]);
        if (row.size() != cols) throw InvalidInput("matrix rows differ in length");
        m.row(r) = row.transpose();
    }
    return m;
}

nlohmann::json to_json(const JitterInstance& instance) {
    const JitterScenario& s = instance.scenario;
    nlohmann::json doc = nlohmann::json::object();
    doc["N"] = s.N;
    doc["domain_lo"] = s.domain_lo;
    doc["domain_hi"] = s.domain_hi;
    doc["delta"] = s.delta;
    doc["K"] = s.K;
    doc["L"] = s.L;
    doc["seed"] = s.seed;
    doc["period"] = s.period();
    doc["u"] = vector_to_json(instance.uniform_locations.values());
    doc["x"] = vector_to_json(instance.true_locations.values());
    doc["W"] = matrix_to_json(instance.W_true);
    doc["Y"] = matrix_to_json(instance.Y);
    return doc;
}

JitterInstance instance_from_json(const nlohmann::json& doc) {
    JitterScenario s;
    try {
        s.N = field(doc, "N").get<Eigen::Index>();
        s.domain_lo = field(doc, "domain_lo").get<double>();
        s.domain_hi = field(doc, "domain_hi").get<double>();
        s.delta = field(doc, "delta").get<double>();
        s.K = field(doc, "K").get<Eigen::Index>();
        s.L = field(doc, "L").get<Eigen::Index>();
        s.seed = field(doc, "seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(fmt::format("malformed fixture scenario: {}", e.what()));
    }
    s.validate();

    JitterInstance inst{s, SampleLocations(vector_from_json(field(doc, "u"))),
                        SampleLocations(vector_from_json(field(doc, "x"))),
                        matrix_from_json(field(doc, "W")), matrix_from_json(field(doc, "Y"))};
    if (inst.uniform_locations.size() != s.N || inst.true_locations.size() != s.N) {
        throw InvalidInput("fixture location arrays must have N entries");
    }
    if (inst.W_true.rows() != s.K || inst.W_true.cols() != s.L) {
        throw InvalidInput("fixture W must be K x L");
    }
    if (inst.Y.rows() != s.N || inst.Y.cols() != s.L) throw InvalidInput("fixture Y must be N x L");
    return inst;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput(fmt::format("cannot open '{}' for writing", path.string()));
    out << text;
    if (!out) throw InvalidInput(fmt::format("failed writing '{}'", path.string()));
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput(fmt::format("cannot open '{}'", path.string()));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
}

void write_fixture(const std::filesystem::path& path, const JitterInstance& instance) {
    write_text(path, dump_json(to_json(instance)));
}

JitterInstance read_fixture(const std::filesystem::path& path) {
    return instance_from_json(read_json(path));
}

}  // namespace blindpoly
