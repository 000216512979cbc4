#include "proscan/materials.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "proscan/csv.hpp"
#include "proscan/errors.hpp"

namespace proscan {

namespace {

// Johnson & Christy (1972) gold film data, (photon energy eV, n, k).
// Rows restricted to the range relevant for visible-light work.
struct NkRow {
    double ev;
    double n;
    double k;
};

constexpr NkRow kGoldJc[] = {
    {1.26, 0.22, 6.350}, {1.39, 0.17, 5.663}, {1.51, 0.16, 5.083}, {1.64, 0.14, 4.542},
    {1.76, 0.13, 4.103}, {1.88, 0.14, 3.697}, {2.01, 0.21, 3.272}, {2.13, 0.29, 2.863},
    {2.26, 0.43, 2.455}, {2.38, 0.62, 2.081}, {2.50, 1.04, 1.833}, {2.63, 1.31, 1.849},
    {2.75, 1.38, 1.914}, {2.88, 1.45, 1.948}, {3.00, 1.46, 1.958}, {3.12, 1.47, 1.952},
    {3.25, 1.46, 1.933}, {3.37, 1.48, 1.895}, {3.50, 1.50, 1.866},
};

constexpr double kEvNm = 1239.8419843320026;  // hc in eV*nm

DielectricTable build_gold_table() {
    DielectricTable table;
    table.provenance_label = "Johnson & Christy 1972 evaporated gold films";
    for (const auto& row : kGoldJc) {
        const double wavelength = kEvNm / row.ev;
        const std::complex<double> nk(row.n, row.k);
        table.rows.push_back({wavelength, nk * nk});
    }
    std::sort(table.rows.begin(), table.rows.end(),
              [](const auto& a, const auto& b) { return a.wavelength_nm < b.wavelength_nm; });
    table.validate();
    return table;
}

}  // namespace

const DielectricTable& DielectricTable::gold_johnson_christy() {
    static const DielectricTable table = build_gold_table();
    return table;
}

DielectricTable DielectricTable::from_csv(const std::filesystem::path& path) {
    const CsvTable csv = CsvTable::read(path);
    const std::size_t wl = csv.column_index("wavelength_nm");
    const std::size_t re = csv.column_index("eps_re");
    const std::size_t im = csv.column_index("eps_im");
    DielectricTable table;
    table.provenance_label = "user table: " + path.filename().string();
    for (const auto& row : csv.rows)
        table.rows.push_back({row[wl], {row[re], row[im]}});
    table.validate();
    return table;
}

void DielectricTable::validate() const {
    if (rows.size() < 2) throw std::invalid_argument("dielectric table needs at least 2 rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && !(rows[i].wavelength_nm > rows[i - 1].wavelength_nm))
            throw std::invalid_argument("dielectric table wavelengths must strictly increase");
        if (rows[i].permittivity.imag() < 0.0)
            throw std::invalid_argument("dielectric table must be passive (Im eps >= 0)");
    }
    if (min_wavelength_nm() > 450.0 || max_wavelength_nm() < 750.0)
        throw std::invalid_argument("dielectric table must span at least [450, 750] nm");
}

std::complex<double> DielectricTable::interpolate(double wavelength_nm) const {
    if (wavelength_nm < min_wavelength_nm() || wavelength_nm > max_wavelength_nm())
        throw RangeError("wavelength " + std::to_string(wavelength_nm) +
                         " nm outside table span [" + std::to_string(min_wavelength_nm()) +
                         ", " + std::to_string(max_wavelength_nm()) + "] nm");
    auto upper = std::lower_bound(
        rows.begin(), rows.end(), wavelength_nm,
        [](const Row& row, double wl) { return row.wavelength_nm < wl; });
    if (upper == rows.begin()) return upper->permittivity;
    auto lower = upper - 1;
    if (upper == rows.end()) return lower->permittivity;
    const double t =
        (wavelength_nm - lower->wavelength_nm) / (upper->wavelength_nm - lower->wavelength_nm);
    const double re =
        lower->permittivity.real() + t * (upper->permittivity.real() - lower->permittivity.real());
    const double im =
        lower->permittivity.imag() + t * (upper->permittivity.imag() - lower->permittivity.imag());
    return {re, im};
}

Materials::Materials() : gold_(DielectricTable::gold_johnson_christy()), glass_index_(1.52) {}

Materials::Materials(DielectricTable gold_table, double glass_index)
    : gold_(std::move(gold_table)), glass_index_(glass_index) {
    gold_.validate();
    if (!(glass_index_ > 0.0))
        throw std::invalid_argument("glass index must be positive");
}

std::complex<double> Materials::permittivity_gold(double wavelength_nm) const {
    return gold_.interpolate(wavelength_nm);
}

double Materials::index_glass(double wavelength_nm) const {
    if (!(wavelength_nm > 0.0))
        throw std::invalid_argument("index_glass: wavelength must be positive");
    return glass_index_;
}

}  // namespace proscan
