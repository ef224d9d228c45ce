#include "kppbbm/profile.hpp"

#include "kppbbm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace kppbbm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& spec)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw UsageError("bad number '" + s + "' in profile '" + spec + "'");
        return v;
    } catch (const std::logic_error&) {
        throw UsageError("bad number '" + s + "' in profile '" + spec + "'");
    }
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

InitialProfile InitialProfile::box(double a, double b, double height)
{
    if (!(a < b))
        throw UsageError("box profile needs a < b");
    if (!(height >= 0.0) || !std::isfinite(height))
        throw UsageError("box height must be finite and >= 0");
    InitialProfile p;
    p.kind_ = Kind::Box;
    p.a_ = a;
    p.b_ = b;
    p.h_ = height;
    p.pieces_.push_back({a, b, height, 0.0});
    p.L0_ = b;
    p.finish();
    return p;
}

InitialProfile InitialProfile::step(double height, double edge)
{
    if (!(height >= 0.0) || !std::isfinite(height))
        throw UsageError("step height must be finite and >= 0");
    InitialProfile p;
    p.kind_ = Kind::Step;
    p.h_ = height;
    p.edge_ = edge;
    p.pieces_.push_back({-kInf, edge, height, 0.0});
    p.L0_ = edge;
    p.finish();
    return p;
}

InitialProfile InitialProfile::zero()
{
    return box(-1.0, 0.0, 0.0);
}

InitialProfile InitialProfile::table(std::vector<double> xs, std::vector<double> ys)
{
    if (xs.size() != ys.size() || xs.size() < 2)
        throw UsageError("table profile needs at least two (x, y) rows");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]) || ys[i] < 0.0)
            throw UsageError("table profile values must be finite and >= 0");
        if (i > 0 && !(xs[i] > xs[i - 1]))
            throw UsageError("table profile x column must be strictly ascending");
    }
    InitialProfile p;
    p.kind_ = Kind::Table;
    // constant extension of the first value to the left
    if (ys.front() > 0.0)
        p.pieces_.push_back({-kInf, xs.front(), ys.front(), 0.0});
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double c1 = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        p.pieces_.push_back({xs[i], xs[i + 1], ys[i] - c1 * xs[i], c1});
    }
    p.L0_ = xs.back();
    p.xs_ = std::move(xs);
    p.ys_ = std::move(ys);
    p.finish();
    return p;
}

InitialProfile InitialProfile::parse(const std::string& spec)
{
    const auto parts = split(spec, ':');
    const std::string& k = parts[0];
    if (k == "zero" && parts.size() == 1)
        return zero();
    if (k == "box") {
        if (parts.size() != 3 && parts.size() != 4)
            throw UsageError("expected box:a:b[:h], got '" + spec + "'");
        const double h = parts.size() == 4 ? to_double(parts[3], spec) : 1.0;
        return box(to_double(parts[1], spec), to_double(parts[2], spec), h);
    }
    if (k == "step") {
        if (parts.size() > 2)
            throw UsageError("expected step[:h], got '" + spec + "'");
        return step(parts.size() == 2 ? to_double(parts[1], spec) : 1.0);
    }
    if (k == "table") {
        if (parts.size() < 2)
            throw UsageError("expected table:<path>");
        const std::string path = spec.substr(6);
        std::ifstream in(path);
        if (!in)
            throw UsageError("cannot open profile table '" + path + "'");
        std::vector<double> xs, ys;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#')
                continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            double x, y;
            if (!(ls >> x >> y)) {
                if (xs.empty())
                    continue; // header
                throw UsageError("malformed row in '" + path + "': " + line);
            }
            xs.push_back(x);
            ys.push_back(y);
        }
        return table(std::move(xs), std::move(ys));
    }
    throw UsageError("unknown profile '" + spec + "' (box:a:b[:h], table:<path>, step[:h], zero)");
}

void InitialProfile::finish()
{
    sup_ = 0.0;
    for (const auto& pc : pieces_) {
        const double l = std::isfinite(pc.left) ? pc.c0 + pc.c1 * pc.left : pc.c0;
        const double r = pc.c0 + pc.c1 * pc.right;
        sup_ = std::max({sup_, l, r});
    }
}

double InitialProfile::value(double x) const
{
    if (x >= L0_)
        return 0.0;
    for (const auto& pc : pieces_)
        if (x >= pc.left && x < pc.right)
            return std::max(0.0, pc.c0 + pc.c1 * x);
    return 0.0;
}

double InitialProfile::cell_average(double x, double h) const
{
    const double lo = x - 0.5 * h, hi = x + 0.5 * h;
    double s = 0.0;
    for (const auto& pc : pieces_) {
        const double l = std::max(lo, pc.left), r = std::min(hi, pc.right);
        if (r > l)
            s += pc.c0 * (r - l) + 0.5 * pc.c1 * (r * r - l * l);
    }
    return std::max(0.0, s / h);
}

InitialProfile InitialProfile::shifted(double L) const
{
    switch (kind_) {
    case Kind::Box:
        return box(a_ + L, b_ + L, h_);
    case Kind::Step:
        return step(h_, edge_ + L);
    case Kind::Table: {
        auto xs = xs_;
        for (auto& x : xs)
            x += L;
        return table(std::move(xs), ys_);
    }
    }
    return *this;
}

InitialProfile InitialProfile::scaled(double lambda) const
{
    if (!(lambda >= 0.0))
        throw UsageError("profile scale must be >= 0");
    switch (kind_) {
    case Kind::Box:
        return box(a_, b_, h_ * lambda);
    case Kind::Step:
        return step(h_ * lambda, edge_);
    case Kind::Table: {
        auto ys = ys_;
        for (auto& y : ys)
            y *= lambda;
        return table(xs_, std::move(ys));
    }
    }
    return *this;
}

std::string InitialProfile::describe() const
{
    switch (kind_) {
    case Kind::Box:
        return "box:" + fmt(a_) + ":" + fmt(b_) + ":" + fmt(h_);
    case Kind::Step:
        return "step:" + fmt(h_) + "@" + fmt(edge_);
    case Kind::Table:
        return "table[" + std::to_string(xs_.size()) + " rows, " + fmt(xs_.front()) + ".." +
               fmt(xs_.back()) + "]";
    }
    return "";
}

std::string InitialProfile::fingerprint() const
{
    if (kind_ != Kind::Table)
        return describe();
    std::string s = "table";
    for (std::size_t i = 0; i < xs_.size(); ++i)
        s += ":" + fmt(xs_[i]) + "," + fmt(ys_[i]);
    return s;
}

InitialProfile hat_transform(const InitialProfile& psi)
{
    auto f = [](double v) { return -std::expm1(-v); };
    switch (psi.kind()) {
    case InitialProfile::Kind::Box: {
        const auto& pc = psi.pieces().front();
        return InitialProfile::box(pc.left, pc.right, f(pc.c0));
    }
    case InitialProfile::Kind::Step: {
        const auto& pc = psi.pieces().front();
        return InitialProfile::step(f(pc.c0), pc.right);
    }
    case InitialProfile::Kind::Table: {
        std::vector<double> xs, ys;
        for (const auto& pc : psi.pieces()) {
            if (!std::isfinite(pc.left))
                continue;
            if (xs.empty()) {
                xs.push_back(pc.left);
                ys.push_back(f(pc.c0 + pc.c1 * pc.left));
            }
            xs.push_back(pc.right);
            ys.push_back(f(pc.c0 + pc.c1 * pc.right));
        }
        return InitialProfile::table(std::move(xs), std::move(ys));
    }
    }
    return psi;
}

} // namespace kppbbm
