#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

namespace proscan {

/// Tabulated complex permittivity versus wavelength, piecewise-linear in the
/// real and imaginary parts independently. Immutable after construction.
struct DielectricTable {
    struct Row {
        double wavelength_nm;
        std::complex<double> permittivity;
    };

    std::vector<Row> rows;
    std::string provenance_label;

    /// Bundled gold dataset: Johnson & Christy, Phys. Rev. B 6, 4370 (1972),
    /// evaporated films, converted from (n, k) to permittivity.
    static const DielectricTable& gold_johnson_christy();

    /// Loads a user table from CSV `wavelength_nm,eps_re,eps_im` (header required).
    static DielectricTable from_csv(const std::filesystem::path& path);

    /// Enforces ordering, passivity and the visible-range span. Throws on violation.
    void validate() const;

    double min_wavelength_nm() const { return rows.front().wavelength_nm; }
    double max_wavelength_nm() const { return rows.back().wavelength_nm; }

    /// Piecewise-linear interpolation; RangeError outside the tabulated span.
    std::complex<double> interpolate(double wavelength_nm) const;
};

/// Optical constants used by every optics module. Gold comes from a table,
/// glass is a non-dispersive constant (1.52 unless overridden), the gap is air.
class Materials {
public:
    Materials();
    explicit Materials(DielectricTable gold_table, double glass_index = 1.52);

    std::complex<double> permittivity_gold(double wavelength_nm) const;
    double index_glass(double wavelength_nm) const;

    double glass_index_value() const { return glass_index_; }
    const DielectricTable& gold_table() const { return gold_; }

private:
    DielectricTable gold_;
    double glass_index_;
};

}  // namespace proscan
