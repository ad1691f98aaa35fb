#pragma once

#include "skelreg/errors.hpp"
#include "skelreg/signal.hpp"
#include "skelreg/solver.hpp"
#include "skelreg/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace skelreg {

/// A problem file could not be read or does not follow the schema.
struct FileFormatError : Error {
    using Error::Error;
};

/// On-disk problem description (JSON). Matrices are inline arrays of
/// rows; forcing components are expression strings in the signal grammar.
/// `projector` ("m" in the file) is written by synth so that the frame of
/// c0 is recorded alongside the data.
struct ProblemFile {
    Matrix b;
    std::vector<std::string> forcing;
    std::optional<Vector> c0;
    std::optional<Vector> x0;
    std::optional<double> t_end;
    std::optional<double> step;
    std::optional<double> tol;
    std::optional<Matrix> projector;
};

[[nodiscard]] ProblemFile load_problem(const std::string& path);
void save_problem(const ProblemFile& problem, const std::string& path);

/// Forcing strings parsed against the dimension of b.
[[nodiscard]] Signal parse_forcing(const ProblemFile& problem);

/// CSV with header t,x_1,...,x_n and 17 significant digits per value
/// (round-trip exact for doubles).
void write_trajectory_csv(const std::string& path, const std::vector<double>& times,
                          const std::vector<Vector>& states);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

struct CsvTrajectory {
    std::vector<double> times;
    std::vector<Vector> states;
};

[[nodiscard]] CsvTrajectory read_trajectory_csv(const std::string& path);

}  // namespace skelreg
