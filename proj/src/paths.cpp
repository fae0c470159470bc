#include "amperean/paths.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "amperean/rng.hpp"

namespace amperean {

PlanarPath::PlanarPath(std::vector<double> times, std::vector<Point> points)
    : times_(std::move(times)), points_(std::move(points)) {
    if (times_.size() != points_.size()) throw Error(ErrorCode::InvalidArgument, "times and points differ in length");
    if (points_.size() < 2) throw Error(ErrorCode::InvalidArgument, "a path needs at least two points");
    if (times_.front() != 0.0) throw Error(ErrorCode::InvalidArgument, "path times must start at 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1])) throw Error(ErrorCode::InvalidArgument, "path times must be strictly increasing");
}

DyadicIndex::DyadicIndex(unsigned level, std::uint64_t position) : k(level), j(position) {
    if (level > 62 || position < 1 || position > (std::uint64_t{1} << level))
        throw Error(ErrorCode::InvalidArgument, "dyadic index out of range");
}

namespace {

std::vector<double> uniform_times(double T, std::size_t n_steps) {
    std::vector<double> t(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(n_steps);
    t[n_steps] = T;
    return t;
}

unsigned log2_exact(std::size_t n) { return static_cast<unsigned>(std::countr_zero(n)); }

}  // namespace

std::size_t steps_for_dt(double T, double max_dt) {
    if (!(T > 0.0) || !(max_dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "steps_for_dt needs positive T and dt");
    std::size_t n = 2;
    while (T / static_cast<double>(n) > max_dt) {
        n *= 2;
        if (n > (std::size_t{1} << 30)) throw Error(ErrorCode::Resolution, "time step too small");
    }
    return n;
}

// Levy construction: level 0 draws the endpoint, level l inserts the midpoints of the
// 2^(l-1) intervals. The Gaussian at (level, index) never depends on n_steps, so a
// coarse path is exactly the even-index subsequence of a finer one with the same seed.
PlanarPath sample_brownian(double T, std::size_t n_steps, std::uint64_t seed, Point start) {
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "duration must be positive");
    if (n_steps < 2 || !is_power_of_two(n_steps))
        throw Error(ErrorCode::InvalidArgument, "n_steps must be a power of two >= 2");
    rng::GaussianStream gauss(seed);
    unsigned levels = log2_exact(n_steps);
    std::vector<Point> pts(n_steps + 1);
    pts[0] = start;
    {
        auto [zx, zy] = gauss.pair(0, 0);
        double s = std::sqrt(T);
        pts[n_steps] = {start.x + s * zx, start.y + s * zy};
    }
    for (unsigned level = 1; level <= levels; ++level) {
        std::size_t stride = n_steps >> level;
        double sd = std::sqrt(std::ldexp(T, -static_cast<int>(level) - 1));
        std::size_t count = std::size_t{1} << level;
        for (std::size_t i = 1; i < count; i += 2) {
            const Point& l = pts[(i - 1) * stride];
            const Point& r = pts[(i + 1) * stride];
            auto [zx, zy] = gauss.pair(level, i);
            pts[i * stride] = {(l.x + r.x) / 2 + sd * zx, (l.y + r.y) / 2 + sd * zy};
        }
    }
    return PlanarPath(uniform_times(T, n_steps), std::move(pts));
}

PlanarPath refine_dyadic(const PlanarPath& path, std::uint64_t seed) {
    std::size_t n = path.steps();
    if (!is_power_of_two(n)) throw Error(ErrorCode::InvalidArgument, "refine_dyadic needs a power-of-two path");
    rng::GaussianStream gauss(seed);
    unsigned level = log2_exact(n) + 1;
    double T = path.duration();
    double sd = std::sqrt(std::ldexp(T, -static_cast<int>(level) - 1));
    auto src = path.points();
    std::vector<Point> pts(2 * n + 1);
    for (std::size_t i = 0; i <= n; ++i) pts[2 * i] = src[i];
    for (std::size_t i = 1; i < 2 * n; i += 2) {
        const Point& l = pts[i - 1];
        const Point& r = pts[i + 1];
        auto [zx, zy] = gauss.pair(level, i);
        pts[i] = {(l.x + r.x) / 2 + sd * zx, (l.y + r.y) / 2 + sd * zy};
    }
    auto src_t = path.times();
    std::vector<double> t(2 * n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[2 * i] = src_t[i];
    for (std::size_t i = 1; i < 2 * n; i += 2) t[i] = 0.5 * (t[i - 1] + t[i + 1]);
    return PlanarPath(std::move(t), std::move(pts));
}

PlanarPath restrict_path(const PlanarPath& path, DyadicIndex idx) {
    std::size_t n = path.steps();
    std::size_t blocks = std::size_t{1} << idx.k;
    if (n % blocks != 0) throw Error(ErrorCode::Resolution, "2^k does not divide the step count");
    std::size_t len = n / blocks;
    std::size_t off = static_cast<std::size_t>(idx.j - 1) * len;
    auto pts = path.points().subspan(off, len + 1);
    auto ts = path.times().subspan(off, len + 1);
    std::vector<double> local(len + 1);
    for (std::size_t i = 0; i <= len; ++i) local[i] = ts[i] - ts[0];
    return PlanarPath(std::move(local), std::vector<Point>(pts.begin(), pts.end()));
}

ClosedLoop close_loop(PlanarPath path) { return ClosedLoop(std::move(path)); }

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error(ErrorCode::Io, "truncated path record");
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void write_path_binary(const PlanarPath& path, const std::filesystem::path& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw Error(ErrorCode::Io, "cannot open " + file.string());
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(path.size()));
    put_le<double>(os, path.duration());
    for (const Point& p : path.points()) {
        put_le<double>(os, p.x);
        put_le<double>(os, p.y);
    }
    if (!os) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

PlanarPath read_path_binary(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw Error(ErrorCode::Io, "cannot open " + file.string());
    auto n = get_le<std::uint32_t>(is);
    double T = get_le<double>(is);
    if (n < 2) throw Error(ErrorCode::Io, "path record with fewer than two points");
    std::vector<Point> pts(n);
    for (auto& p : pts) {
        p.x = get_le<double>(is);
        p.y = get_le<double>(is);
    }
    return PlanarPath(uniform_times(T, n - 1), std::move(pts));
}

void write_path_csv(const PlanarPath& path, const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) throw Error(ErrorCode::Io, "cannot open " + file.string());
    os << "t,x,y\n" << std::setprecision(17);
    for (std::size_t i = 0; i < path.size(); ++i)
        os << path.times()[i] << ',' << path.points()[i].x << ',' << path.points()[i].y << '\n';
    if (!os) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

}  // namespace amperean
