#include "vpatch/grid_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace vpatch {

GridField::GridField(std::size_t nx, std::size_t ny, double xmax)
    : GridField(nx, ny, xmax, std::vector<double>(nx * ny, 0.0)) {}

GridField::GridField(std::size_t nx, std::size_t ny, double xmax, std::vector<double> values)
    : nx_(nx), ny_(ny), xmax_(xmax), values_(std::move(values)) {
    if (nx == 0 || ny == 0 || !(xmax > 0.0)) {
        throw ParameterRangeError("grid needs nx, ny > 0 and xmax > 0");
    }
    if (values_.size() != nx * ny) {
        throw ParameterRangeError("grid value count does not match nx * ny");
    }
}

double GridField::maxValue() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

bool GridField::sameGeometry(const GridField& other) const {
    return nx_ == other.nx_ && ny_ == other.ny_ && xmax_ == other.xmax_;
}

void GridField::validate() const {
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0) {
            throw DomainError("grid field must be finite and nonnegative");
        }
    }
    for (std::size_t j = 0; j < ny_; ++j) {
        if (at(nx_ - 1, j) != 0.0) {
            throw DomainError("grid field support must stay inside the grid (last column nonzero)");
        }
    }
}

GridField GridField::fromFunction(std::size_t nx, std::size_t ny, double xmax,
                                  const std::function<double(double, double)>& f) {
    GridField g(nx, ny, xmax);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            g.at(i, j) = f(g.x1Center(i), g.x2Center(j));
        }
    }
    return g;
}

StripProfile::StripProfile(std::vector<double> samples, double lmax, double supportBound,
                           double heightBound)
    : samples_(std::move(samples)), lmax_(lmax), support_(supportBound), height_(heightBound) {
    if (samples_.size() < 2 || !(lmax_ > 0.0)) {
        throw ParameterRangeError("strip profile needs >= 2 samples on a positive interval");
    }
    const double h = lmax_ / static_cast<double>(samples_.size() - 1);
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const double v = samples_[k];
        if (!(v >= 0.0) || v > height_) {
            throw DomainError("strip profile samples must lie in [0, M]");
        }
        if (k > 0 && v > samples_[k - 1] + 1e-12) {
            throw DomainError("strip profile must be non-increasing");
        }
        if (static_cast<double>(k) * h >= support_ && v != 0.0) {
            throw DomainError("strip profile must vanish for x1 >= L");
        }
    }
}

double StripProfile::operator()(double x1) const {
    if (x1 < 0.0 || x1 >= lmax_ || x1 >= support_) return 0.0;
    const double h = lmax_ / static_cast<double>(samples_.size() - 1);
    const double s = x1 / h;
    const auto k = static_cast<std::size_t>(s);
    if (k + 1 >= samples_.size()) return samples_.back();
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * samples_[k] + w * samples_[k + 1];
}

GridField StripProfile::rasterize(std::size_t nx, std::size_t ny, double xmax) const {
    return GridField::fromFunction(nx, ny, xmax, [this](double x1, double) { return (*this)(x1); });
}

StripProfile StripProfile::indicator(double width) {
    // Samples are 1 below width and 0 from width on; the ramp is one sample wide.
    constexpr std::size_t n = 4097;
    const double lmax = 2.0 * width;
    std::vector<double> s(n, 0.0);
    const double h = lmax / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        if (static_cast<double>(k) * h < width) s[k] = 1.0;
    }
    return StripProfile(std::move(s), lmax, width, 1.0);
}

void writeGridCsv(const GridField& f, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "nx,ny,xmax\n" << f.nx() << ',' << f.ny() << ',' << std::setprecision(17) << f.xmax() << '\n';
    for (std::size_t j = 0; j < f.ny(); ++j) {
        for (std::size_t i = 0; i < f.nx(); ++i) {
            if (i) out << ',';
            out << f.at(i, j);
        }
        out << '\n';
    }
}

GridField readGridCsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("nx,ny,xmax", 0) != 0) throw Error("grid csv: missing header in " + path.string());
    std::getline(in, line);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream hdr(line);
    std::size_t nx = 0;
    std::size_t ny = 0;
    double xmax = 0.0;
    if (!(hdr >> nx >> ny >> xmax)) throw Error("grid csv: malformed geometry line");
    std::vector<double> values;
    values.reserve(nx * ny);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double v = 0.0;
        while (row >> v) values.push_back(v);
    }
    return GridField(nx, ny, xmax, std::move(values));
}

namespace {

constexpr char kGridMagic[8] = {'V', 'P', 'G', 'R', 'I', 'D', '0', '1'};

template <class T>
void putLE(std::ostream& out, T v) {
    static_assert(std::endian::native == std::endian::little, "binary grid IO assumes little-endian host");
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T getLE(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("grid binary: truncated file");
    return v;
}

}  // namespace

void writeGridBinary(const GridField& f, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(kGridMagic, sizeof(kGridMagic));
    putLE<std::uint64_t>(out, f.nx());
    putLE<std::uint64_t>(out, f.ny());
    putLE<double>(out, f.xmax());
    for (double v : f.values()) putLE<double>(out, v);
}

GridField readGridBinary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) {
        throw Error("grid binary: bad magic in " + path.string());
    }
    const auto nx = getLE<std::uint64_t>(in);
    const auto ny = getLE<std::uint64_t>(in);
    const auto xmax = getLE<double>(in);
    std::vector<double> values(nx * ny);
    for (double& v : values) v = getLE<double>(in);
    return GridField(nx, ny, xmax, std::move(values));
}

}  // namespace vpatch
