#include "skelreg/problem.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace skelreg {

namespace {

using nlohmann::json;

Matrix matrix_from_json(const json& rows, const std::string& field) {
    if (!rows.is_array()) {
        throw FileFormatError("field '" + field + "' must be an array of rows");
    }
    const Index n_rows = static_cast<Index>(rows.size());
    Index n_cols = -1;
    Matrix m;
    for (Index i = 0; i < n_rows; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array()) {
            throw FileFormatError("field '" + field + "' must be an array of rows");
        }
        if (n_cols < 0) {
            n_cols = static_cast<Index>(row.size());
            m.resize(n_rows, n_cols);
        } else if (static_cast<Index>(row.size()) != n_cols) {
            throw FileFormatError("field '" + field + "' has rows of unequal length");
        }
        for (Index j = 0; j < n_cols; ++j) {
            const json& v = row[static_cast<std::size_t>(j)];
            if (!v.is_number()) {
                throw FileFormatError("field '" + field + "' has a non-numeric entry");
            }
            m(i, j) = v.get<double>();
        }
    }
    if (n_rows == 0) {
        m.resize(0, 0);
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Vector vector_from_json(const json& arr, const std::string& field) {
    if (!arr.is_array()) {
        throw FileFormatError("field '" + field + "' must be an array of numbers");
    }
    Vector v(static_cast<Index>(arr.size()));
    for (Index i = 0; i < v.size(); ++i) {
        const json& x = arr[static_cast<std::size_t>(i)];
        if (!x.is_number()) {
            throw FileFormatError("field '" + field + "' has a non-numeric entry");
        }
        v(i) = x.get<double>();
    }
    return v;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        arr.push_back(v(i));
    }
    return arr;
}

double number_from_json(const json& v, const std::string& field) {
    if (!v.is_number()) {
        throw FileFormatError("field '" + field + "' must be a number");
    }
    return v.get<double>();
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileFormatError("cannot open problem file: " + path);
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw FileFormatError("invalid JSON in " + path + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw FileFormatError("problem file must be a JSON object");
    }

    ProblemFile problem;
    bool has_b = false;
    for (const auto& [key, value] : doc.items()) {
        if (key == "b") {
            problem.b = matrix_from_json(value, "b");
            has_b = true;
        } else if (key == "f") {
            if (!value.is_array()) {
                throw FileFormatError("field 'f' must be an array of expression strings");
            }
            for (const auto& comp : value) {
                if (!comp.is_string()) {
                    throw FileFormatError("field 'f' must be an array of expression strings");
                }
                problem.forcing.push_back(comp.get<std::string>());
            }
        } else if (key == "c0") {
            problem.c0 = vector_from_json(value, "c0");
        } else if (key == "x0") {
            problem.x0 = vector_from_json(value, "x0");
        } else if (key == "t_end") {
            problem.t_end = number_from_json(value, "t_end");
        } else if (key == "step") {
            problem.step = number_from_json(value, "step");
        } else if (key == "tol") {
            problem.tol = number_from_json(value, "tol");
        } else if (key == "m") {
            problem.projector = matrix_from_json(value, "m");
        } else {
            throw FileFormatError("unknown field '" + key + "' in problem file");
        }
    }
    if (!has_b) {
        throw FileFormatError("problem file is missing the matrix field 'b'");
    }
    if (problem.b.rows() != problem.b.cols()) {
        throw FileFormatError("matrix 'b' must be square");
    }
    if (!problem.b.allFinite()) {
        throw FileFormatError("matrix 'b' has non-finite entries");
    }
    if (!problem.forcing.empty() &&
        static_cast<Index>(problem.forcing.size()) != problem.b.rows()) {
        throw FileFormatError("field 'f' must have one component per row of 'b'");
    }
    return problem;
}

void save_problem(const ProblemFile& problem, const std::string& path) {
    json doc;
    doc["b"] = matrix_to_json(problem.b);
    if (!problem.forcing.empty()) {
        doc["f"] = problem.forcing;
    }
    if (problem.c0) doc["c0"] = vector_to_json(*problem.c0);
    if (problem.x0) doc["x0"] = vector_to_json(*problem.x0);
    if (problem.t_end) doc["t_end"] = *problem.t_end;
    if (problem.step) doc["step"] = *problem.step;
    if (problem.tol) doc["tol"] = *problem.tol;
    if (problem.projector) doc["m"] = matrix_to_json(*problem.projector);

    std::ofstream out(path);
    if (!out) {
        throw FileFormatError("cannot write problem file: " + path);
    }
    out << doc.dump(2) << "\n";
}

Signal parse_forcing(const ProblemFile& problem) {
    if (problem.forcing.empty()) {
        throw FileFormatError("problem file is missing the forcing field 'f'");
    }
    std::string joined;
    for (std::size_t i = 0; i < problem.forcing.size(); ++i) {
        if (i > 0) joined += "; ";
        joined += problem.forcing[i];
    }
    return parse_signal(joined, problem.b.rows());
}

void write_trajectory_csv(const std::string& path, const std::vector<double>& times,
                          const std::vector<Vector>& states) {
    std::ofstream out(path);
    if (!out) {
        throw FileFormatError("cannot write trajectory file: " + path);
    }
    const Index n = states.empty() ? 0 : states.front().size();
    out << "t";
    for (Index j = 0; j < n; ++j) {
        out << ",x_" << (j + 1);
    }
    out << "\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << fmt17(times[k]);
        for (Index j = 0; j < n; ++j) {
            out << "," << fmt17(states[k](j));
        }
        out << "\n";
    }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    write_trajectory_csv(path, traj.times, traj.states);
}

CsvTrajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileFormatError("cannot open trajectory file: " + path);
    }
    CsvTrajectory out;
    std::string line;
    if (!std::getline(in, line)) {
        throw FileFormatError("trajectory file is empty: " + path);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            values.push_back(std::stod(cell));
        }
        if (values.empty()) {
            throw FileFormatError("malformed CSV row in " + path);
        }
        out.times.push_back(values[0]);
        Vector state(static_cast<Index>(values.size()) - 1);
        for (Index j = 0; j < state.size(); ++j) {
            state(j) = values[static_cast<std::size_t>(j) + 1];
        }
        out.states.push_back(std::move(state));
    }
    return out;
}

}  // namespace skelreg
