#pragma once

#include <filesystem>
#include <vector>

namespace proscan {

/// Sampled wavelength/intensity pairs (interference, scattering or emission).
struct Spectrum {
    std::vector<double> wavelengths_nm;  // strictly increasing
    std::vector<double> intensities;     // non-negative, arbitrary units

    void validate() const;

    void write_csv(const std::filesystem::path& path) const;
    static Spectrum read_csv(const std::filesystem::path& path);
};

/// Uniform wavelength grid, inclusive of both endpoints.
std::vector<double> wavelength_grid(double min_nm, double max_nm, std::size_t points);

}  // namespace proscan
