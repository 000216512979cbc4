#pragma once

#include <stdexcept>
#include <string>

namespace proscan {

/// Invalid or incomplete scenario configuration (missing section, bad field).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested value outside a tabulated or supported range.
class RangeError : public std::out_of_range {
public:
    explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

/// Physically impossible geometry (negative gap, emitter inside the sphere, ...).
class GeometryError : public std::invalid_argument {
public:
    explicit GeometryError(const std::string& what) : std::invalid_argument(what) {}
};

/// Source placed too close to the frame edge for its PSF footprint.
class PlacementError : public std::invalid_argument {
public:
    explicit PlacementError(const std::string& what) : std::invalid_argument(what) {}
};

/// Series or iteration failed to converge; carries the partial result.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double partial)
        : std::runtime_error(what), partial_sum(partial) {}
    double partial_sum;
};

/// Nonlinear fit did not converge; carries the last residual norm.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, double residual_norm)
        : std::runtime_error(what), residual(residual_norm) {}
    double residual;
};

/// Input carries no usable signal (flat ROI, all-zero trace, ...).
class DegenerateInputError : public std::invalid_argument {
public:
    explicit DegenerateInputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Not enough sideband frames to extrapolate through a coupled region.
class ExtrapolationError : public std::runtime_error {
public:
    explicit ExtrapolationError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; carries 1-based line and column.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line_no, std::size_t column_no)
        : std::runtime_error(what + " (line " + std::to_string(line_no) + ", column " +
                             std::to_string(column_no) + ")"),
          line(line_no), column(column_no) {}
    std::size_t line;
    std::size_t column;
};

}  // namespace proscan
