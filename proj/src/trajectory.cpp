#include "ddsindy/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>

namespace ddsindy {

void SampledTrajectory::validate() const {
    const Eigen::Index m = times.size();
    require(m >= 1, "trajectory: empty time grid");
    require(states.rows() == m, "trajectory: states row count does not match times");
    require(states.cols() >= 1, "trajectory: need at least one state column");
    for (Eigen::Index i = 1; i < m; ++i)
        require(times[i] > times[i - 1], "trajectory: times must be strictly increasing (row " +
                                             std::to_string(i) + ")");
    if (derivs) {
        require(derivs->rows() == m && derivs->cols() == states.cols(),
                "trajectory: derivative block shape mismatch");
    }
    if (history) {
        const auto& h = *history;
        require(h.times.size() >= 1, "trajectory: empty history segment");
        require(h.values.rows() == h.times.size() && h.values.cols() == states.cols(),
                "trajectory: history shape mismatch");
        for (Eigen::Index i = 1; i < h.times.size(); ++i)
            require(h.times[i] > h.times[i - 1], "trajectory: history times must be strictly increasing");
        require(h.times[h.times.size() - 1] <= times[0],
                "trajectory: history times must not exceed t0");
    }
}

// ---------------------------------------------------------------------------
// LinearRecord

LinearRecord::LinearRecord(std::optional<HistorySegment> history, Eigen::Index n) : n_(n) {
    if (history) {
        const auto& h = *history;
        require(h.values.cols() == n, "record: history width mismatch");
        hist_t_.assign(h.times.data(), h.times.data() + h.times.size());
        hist_x_.reserve(static_cast<std::size_t>(h.times.size()));
        for (Eigen::Index i = 0; i < h.times.size(); ++i)
            hist_x_.push_back(h.values.row(i).transpose());
    }
}

LinearRecord::LinearRecord(const SampledTrajectory& traj)
    : LinearRecord(traj.history, traj.cols()) {
    for (Eigen::Index i = 0; i < traj.rows(); ++i)
        append(traj.times[i], traj.states.row(i).transpose());
}

void LinearRecord::append(double t, const Eigen::VectorXd& x) {
    require(x.size() == n_, "record: appended value width mismatch");
    require(ts_.empty() || t > ts_.back(), "record: appended time must increase");
    ts_.push_back(t);
    xs_.push_back(x);
}

double LinearRecord::min_time() const {
    if (!hist_t_.empty()) return hist_t_.front();
    require(!ts_.empty(), "record: empty");
    return ts_.front();
}

double LinearRecord::max_time() const {
    if (!ts_.empty()) return ts_.back();
    require(!hist_t_.empty(), "record: empty");
    return hist_t_.back();
}

namespace {

// Interpolate within one sorted segment; q must lie in [t.front(), t.back()].
double interp_segment(const std::vector<double>& t, const std::vector<Eigen::VectorXd>& x,
                      double q, Eigen::Index j) {
    auto it = std::upper_bound(t.begin(), t.end(), q);
    if (it == t.begin()) return x.front()[j];
    if (it == t.end()) return x.back()[j];
    const std::size_t hi = static_cast<std::size_t>(it - t.begin());
    const std::size_t lo = hi - 1;
    const double w = (q - t[lo]) / (t[hi] - t[lo]);
    return (1.0 - w) * x[lo][j] + w * x[hi][j];
}

} // namespace

double LinearRecord::at(double q, Eigen::Index j) const {
    require(j >= 0 && j < n_, "record: component out of range");
    require(q >= min_time() && q <= max_time() + 1e-12, "record: query outside coverage");
    // Samples win at t0 and above; REs may jump at t0 and the solution value
    // is the right-continuous one.
    if (!ts_.empty() && q >= ts_.front()) return interp_segment(ts_, xs_, q, j);
    if (!hist_t_.empty() && q <= hist_t_.back()) return interp_segment(hist_t_, hist_x_, q, j);
    // Gap between the last history point and t0: bridge linearly.
    require(!hist_t_.empty() && !ts_.empty(), "record: query outside coverage");
    const double t0 = hist_t_.back(), t1 = ts_.front();
    const double w = (q - t0) / (t1 - t0);
    return (1.0 - w) * hist_x_.back()[j] + w * xs_.front()[j];
}

Eigen::VectorXd LinearRecord::at(double q) const {
    Eigen::VectorXd out(n_);
    for (Eigen::Index j = 0; j < n_; ++j) out[j] = at(q, j);
    return out;
}

// ---------------------------------------------------------------------------
// CSV I/O

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) {
        // trim
        const auto b = cur.find_first_not_of(" \t\r");
        const auto e = cur.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
    }
    return out;
}

bool is_marker(const std::string& line) {
    return line.find("--- t0 ---") != std::string::npos;
}

} // namespace

SampledTrajectory load_trajectory(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load: cannot open '" + path + "'");

    std::vector<std::string> header;
    std::vector<std::vector<double>> hist_rows, main_rows;
    bool seen_marker = false;
    std::string line;
    std::vector<std::vector<double>>* sink = nullptr;  // filled after header
    std::vector<std::vector<double>> pending;          // rows before we know about a marker

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (is_marker(line)) {
                require(!seen_marker, "load: duplicate t0 marker in '" + path + "'");
                seen_marker = true;
                hist_rows = std::move(pending);
                pending.clear();
            }
            continue;
        }
        if (header.empty()) {
            header = split_csv_line(line);
            continue;
        }
        auto fields = split_csv_line(line);
        require(fields.size() == header.size(),
                "load: ragged row in '" + path + "' (expected " + std::to_string(header.size()) +
                    " fields, got " + std::to_string(fields.size()) + ")");
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(f, &used));
                require(used == f.size(), "load: trailing characters in field '" + f + "'");
            } catch (const std::exception&) {
                throw Error("load: cannot parse numeric field '" + f + "' in '" + path + "'");
            }
        }
        pending.push_back(std::move(row));
    }
    main_rows = std::move(pending);
    (void)sink;

    require(!header.empty(), "load: missing header in '" + path + "'");
    require(header[0] == "t", "load: first column must be 't' in '" + path + "'");
    Eigen::Index n = 0, nd = 0;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].rfind("dx", 0) == 0)
            ++nd;
        else if (header[c].rfind("x", 0) == 0)
            ++n;
        else
            throw Error("load: unexpected column '" + header[c] + "'");
    }
    require(n >= 1, "load: no state columns");
    require(nd == 0 || nd == n, "load: derivative column count must match state count");
    require(!main_rows.empty(), "load: no data rows");

    SampledTrajectory traj;
    const Eigen::Index m = static_cast<Eigen::Index>(main_rows.size());
    traj.times.resize(m);
    traj.states.resize(m, n);
    if (nd > 0) traj.derivs = Eigen::MatrixXd(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = main_rows[static_cast<std::size_t>(i)];
        traj.times[i] = r[0];
        for (Eigen::Index j = 0; j < n; ++j) traj.states(i, j) = r[1 + static_cast<std::size_t>(j)];
        if (nd > 0)
            for (Eigen::Index j = 0; j < n; ++j)
                (*traj.derivs)(i, j) = r[1 + static_cast<std::size_t>(n + j)];
    }
    if (!hist_rows.empty()) {
        HistorySegment h;
        const Eigen::Index hm = static_cast<Eigen::Index>(hist_rows.size());
        h.times.resize(hm);
        h.values.resize(hm, n);
        for (Eigen::Index i = 0; i < hm; ++i) {
            const auto& r = hist_rows[static_cast<std::size_t>(i)];
            h.times[i] = r[0];
            for (Eigen::Index j = 0; j < n; ++j) h.values(i, j) = r[1 + static_cast<std::size_t>(j)];
        }
        traj.history = std::move(h);
    }
    traj.validate();
    return traj;
}

void save_trajectory(const std::string& path, const SampledTrajectory& traj) {
    traj.validate();
    std::ofstream out(path);
    require(out.good(), "save: cannot open '" + path + "' for writing");
    out.precision(17);
    const Eigen::Index n = traj.cols();
    out << "t";
    for (Eigen::Index j = 0; j < n; ++j) out << ",x" << (j + 1);
    if (traj.derivs)
        for (Eigen::Index j = 0; j < n; ++j) out << ",dx" << (j + 1);
    out << "\n";
    if (traj.history) {
        const auto& h = *traj.history;
        for (Eigen::Index i = 0; i < h.times.size(); ++i) {
            out << h.times[i];
            for (Eigen::Index j = 0; j < n; ++j) out << "," << h.values(i, j);
            if (traj.derivs)
                for (Eigen::Index j = 0; j < n; ++j) out << "," << 0.0;
            out << "\n";
        }
        out << "# --- t0 ---\n";
    }
    for (Eigen::Index i = 0; i < traj.rows(); ++i) {
        out << traj.times[i];
        for (Eigen::Index j = 0; j < n; ++j) out << "," << traj.states(i, j);
        if (traj.derivs)
            for (Eigen::Index j = 0; j < n; ++j) out << "," << (*traj.derivs)(i, j);
        out << "\n";
    }
    require(out.good(), "save: write failure on '" + path + "'");
}

// ---------------------------------------------------------------------------
// Shifted lookups

ShiftedValues shifted_values(const LinearRecord& record, const Eigen::VectorXd& times,
                             double sigma) {
    require(sigma <= 0.0, "shifted_values: sigma must be <= 0");
    const Eigen::Index m = times.size();
    ShiftedValues out;
    out.values = Eigen::MatrixXd::Zero(m, record.components());
    out.valid.assign(static_cast<std::size_t>(m), false);
    const double tmin = record.min_time();
    for (Eigen::Index i = 0; i < m; ++i) {
        const double q = times[i] + sigma;
        if (q < tmin) continue;  // masked, never extrapolated
        out.values.row(i) = record.at(q).transpose();
        out.valid[static_cast<std::size_t>(i)] = true;
    }
    return out;
}

ShiftedValues shifted_values(const SampledTrajectory& traj, double sigma) {
    traj.validate();
    LinearRecord rec(traj);
    return shifted_values(rec, traj.times, sigma);
}

// ---------------------------------------------------------------------------
// Derivative estimation

Eigen::MatrixXd estimate_derivatives(const Eigen::VectorXd& t, const Eigen::MatrixXd& x) {
    const Eigen::Index m = t.size();
    require(m >= 3, "estimate_derivatives: need at least 3 samples");
    Eigen::MatrixXd d(m, x.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index i0, i1, i2;
        if (i == 0) {
            i0 = 0; i1 = 1; i2 = 2;
        } else if (i == m - 1) {
            i0 = m - 3; i1 = m - 2; i2 = m - 1;
        } else {
            i0 = i - 1; i1 = i; i2 = i + 1;
        }
        // Differentiate the quadratic through (t0,t1,t2) at t[i]; exact on
        // polynomials of degree <= 2 for any node spacing.
        const double t0 = t[i0], t1 = t[i1], t2 = t[i2], ti = t[i];
        const double c0 = (2.0 * ti - t1 - t2) / ((t0 - t1) * (t0 - t2));
        const double c1 = (2.0 * ti - t0 - t2) / ((t1 - t0) * (t1 - t2));
        const double c2 = (2.0 * ti - t0 - t1) / ((t2 - t0) * (t2 - t1));
        d.row(i) = c0 * x.row(i0) + c1 * x.row(i1) + c2 * x.row(i2);
    }
    return d;
}

Eigen::MatrixXd estimate_derivatives(const SampledTrajectory& traj) {
    traj.validate();
    return estimate_derivatives(traj.times, traj.states);
}

SmoothedSignal smooth_local_poly(const Eigen::VectorXd& t, const Eigen::MatrixXd& x,
                                 int half_width, int degree) {
    const Eigen::Index m = t.size();
    require(half_width >= 1, "smooth: half_width must be >= 1");
    require(degree >= 1, "smooth: degree must be >= 1");
    require(m >= degree + 1, "smooth: not enough samples for the requested degree");
    SmoothedSignal out;
    out.states.resize(m, x.cols());
    out.derivs.resize(m, x.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half_width);
        const Eigen::Index hi = std::min<Eigen::Index>(m - 1, i + half_width);
        const Eigen::Index w = hi - lo + 1;
        const int deg = std::min<int>(degree, static_cast<int>(w) - 1);
        Eigen::MatrixXd V(w, deg + 1);
        for (Eigen::Index r = 0; r < w; ++r) {
            const double dt = t[lo + r] - t[i];
            double p = 1.0;
            for (int c = 0; c <= deg; ++c) {
                V(r, c) = p;
                p *= dt;
            }
        }
        const Eigen::MatrixXd coef =
            V.colPivHouseholderQr().solve(x.middleRows(lo, w));  // (deg+1) x n
        out.states.row(i) = coef.row(0);
        if (deg >= 1)
            out.derivs.row(i) = coef.row(1);
        else
            out.derivs.row(i).setZero();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Noise and splitting

SampledTrajectory add_noise(const SampledTrajectory& traj, double level, std::uint64_t seed) {
    traj.validate();
    require(level >= 0.0, "add_noise: level must be >= 0");
    if (level == 0.0) return traj;
    SampledTrajectory out = traj;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index j = 0; j < traj.cols(); ++j) {
        const double rms = std::sqrt(traj.states.col(j).squaredNorm() /
                                     static_cast<double>(traj.rows()));
        const double sd = level * rms;
        for (Eigen::Index i = 0; i < traj.rows(); ++i) out.states(i, j) += sd * gauss(gen);
    }
    if (traj.derivs) {
        out.derivs = estimate_derivatives(out.times, out.states);
        out.derivs_exact = false;
    }
    return out;
}

std::pair<SampledTrajectory, SampledTrajectory> split(const SampledTrajectory& traj,
                                                      const SplitSpec& spec) {
    traj.validate();
    require(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0,
            "split: train_fraction must lie in (0, 1]");
    const Eigen::Index m = traj.rows();
    const Eigen::Index k =
        static_cast<Eigen::Index>(std::ceil(spec.train_fraction * static_cast<double>(m)));
    require(k >= 1, "split: empty training subset");
    require(k < m, "split: empty validation subset");

    auto take = [&](Eigen::Index begin, Eigen::Index count) {
        SampledTrajectory part;
        part.times = traj.times.segment(begin, count);
        part.states = traj.states.middleRows(begin, count);
        if (traj.derivs) part.derivs = traj.derivs->middleRows(begin, count);
        part.history = traj.history;
        return part;
    };
    return {take(0, k), take(k, m - k)};
}

} // namespace ddsindy
