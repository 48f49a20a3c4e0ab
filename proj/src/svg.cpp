#include "flock/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace flock::svg {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr std::size_t kMaxPoints = 1500;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

// Pixel coordinates never need more than two decimals.
std::string px(double x) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::fixed, 2);
    return {buf.data(), res.ptr};
}

std::string label(double x) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 4);
    return {buf.data(), res.ptr};
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void pad(double fraction) {
        const double m = fraction * (hi - lo);
        lo -= m;
        hi += m;
    }
    void finish() {
        if (!std::isfinite(lo)) { lo = 0.0, hi = 1.0; }
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
            lo -= 0.5 * std::max(1.0, std::abs(lo));
            hi += 0.5 * std::max(1.0, std::abs(hi));
        }
    }
};

class Canvas {
public:
    Canvas(Range x, Range y) : x_(x), y_(y) {}

    [[nodiscard]] double sx(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * plot_w(); }
    [[nodiscard]] double sy(double y) const { return kTop + (y_.hi - y) / (y_.hi - y_.lo) * plot_h(); }
    static double plot_w() { return kWidth - kLeft - kRight; }
    static double plot_h() { return kHeight - kTop - kBottom; }

    void frame(std::ostringstream& out, const ChartOptions& o, bool log_y) const {
        out << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(plot_w())
            << "\" height=\"" << px(plot_h()) << "\" fill=\"none\" stroke=\"#333\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double fx = x_.lo + (x_.hi - x_.lo) * k / 4.0;
            const double fy = y_.lo + (y_.hi - y_.lo) * k / 4.0;
            out << "<text x=\"" << px(sx(fx)) << "\" y=\"" << px(kHeight - kBottom + 18)
                << "\" font-size=\"11\" text-anchor=\"middle\">" << label(fx) << "</text>\n";
            out << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(sy(fy) + 4)
                << "\" font-size=\"11\" text-anchor=\"end\">" << label(log_y ? std::pow(10.0, fy) : fy)
                << "</text>\n";
            out << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(sy(fy)) << "\" x2=\"" << px(kLeft + plot_w())
                << "\" y2=\"" << px(sy(fy)) << "\" stroke=\"#ddd\"/>\n";
        }
        out << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">"
            << escape(o.title) << "</text>\n";
        out << "<text x=\"" << px(kLeft + plot_w() / 2) << "\" y=\"" << px(kHeight - 16)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
        out << "<text x=\"18\" y=\"" << px(kTop + plot_h() / 2) << "\" font-size=\"12\" text-anchor=\"middle\" "
            << "transform=\"rotate(-90 18 " << px(kTop + plot_h() / 2) << ")\">" << escape(o.y_label) << "</text>\n";
    }

private:
    Range x_;
    Range y_;
};

std::string open_svg() {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(kWidth) << "\" height=\"" << px(kHeight)
        << "\" viewBox=\"0 0 " << px(kWidth) << ' ' << px(kHeight) << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out.str();
}

void legend(std::ostringstream& out, std::size_t k, const std::string& text) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(k);
    const double x = kWidth - kRight + 12;
    out << "<line x1=\"" << px(x) << "\" y1=\"" << px(y) << "\" x2=\"" << px(x + 20) << "\" y2=\"" << px(y)
        << "\" stroke=\"" << kPalette[k % kPalette.size()] << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << px(x + 26) << "\" y=\"" << px(y + 4) << "\" font-size=\"11\">" << escape(text)
        << "</text>\n";
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& options) {
    const auto ty = [&](double y) { return options.log_y ? (y > 0 ? std::log10(y) : std::nan("")) : y; };
    Range xr;
    Range yr;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            xr.include(s.x[k]);
            yr.include(ty(s.y[k]));
        }
    }
    xr.finish();
    yr.finish();
    const Canvas canvas(xr, yr);

    std::ostringstream out;
    out << open_svg();
    canvas.frame(out, options, options.log_y);
    for (std::size_t j = 0; j < series.size(); ++j) {
        const auto& s = series[j];
        const std::size_t stride = std::max<std::size_t>(1, (s.x.size() + kMaxPoints - 1) / kMaxPoints);
        out << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kPalette[j % kPalette.size()]
            << "\" points=\"";
        bool first = true;
        for (std::size_t k = 0; k < s.x.size(); k += stride) {
            const double y = ty(s.y[k]);
            if (!std::isfinite(y)) { continue; }
            out << (first ? "" : " ") << px(canvas.sx(s.x[k])) << ',' << px(canvas.sy(y));
            first = false;
        }
        out << "\"/>\n";
        legend(out, j, s.label);
    }
    out << "</svg>\n";
    return out.str();
}

std::string trajectory_plot(const Framework& fw, const TrajectoryRecord& traj, const std::string& title) {
    const int n = fw.agent_count();
    Range xr;
    Range yr;
    for (const auto& s : traj.samples) {
        for (int i = 0; i < n; ++i) {
            xr.include(s.q.block(i)(0));
            yr.include(s.q.block(i)(1));
        }
    }
    xr.finish();
    yr.finish();
    xr.pad(0.05);
    yr.pad(0.05);
    const Canvas canvas(xr, yr);

    std::ostringstream out;
    out << open_svg();
    canvas.frame(out, {title, "x", "y", false}, false);
    const std::size_t stride = std::max<std::size_t>(1, (traj.size() + kMaxPoints - 1) / kMaxPoints);
    for (int i = 0; i < n; ++i) {
        out << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << kPalette[static_cast<std::size_t>(i) % kPalette.size()]
            << "\" points=\"";
        for (std::size_t k = 0; k < traj.size(); k += stride) {
            const auto qi = traj.samples[k].q.block(i);
            out << (k == 0 ? "" : " ") << px(canvas.sx(qi(0))) << ',' << px(canvas.sy(qi(1)));
        }
        out << "\"/>\n";
        legend(out, static_cast<std::size_t>(i), "agent " + std::to_string(i + 1));
    }
    if (!traj.samples.empty()) {
        const auto& q = traj.back().q;
        for (const auto& e : fw.edges()) {
            out << "<line x1=\"" << px(canvas.sx(q.block(e.tail)(0))) << "\" y1=\"" << px(canvas.sy(q.block(e.tail)(1)))
                << "\" x2=\"" << px(canvas.sx(q.block(e.head)(0))) << "\" y2=\"" << px(canvas.sy(q.block(e.head)(1)))
                << "\" stroke=\"#000\" stroke-dasharray=\"4 3\"/>\n";
        }
        for (int i = 0; i < n; ++i) {
            out << "<circle cx=\"" << px(canvas.sx(q.block(i)(0))) << "\" cy=\"" << px(canvas.sy(q.block(i)(1)))
                << "\" r=\"4\" fill=\"" << kPalette[static_cast<std::size_t>(i) % kPalette.size()] << "\"/>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace flock::svg
