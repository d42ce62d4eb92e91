#include "splatsim/metrics.hpp"

#include "splatsim/error.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace splatsim {

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw Error(std::string(what) + ": image dimensions differ");
}

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double x = i - kSsimWindow / 2;
        w[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Single-channel plane.
struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;
    Plane(int w_, int h_) : w(w_), h(h_), v(std::size_t(w_) * h_, 0.0) {}
    double& operator()(int x, int y) { return v[std::size_t(y) * w + x]; }
    double operator()(int x, int y) const { return v[std::size_t(y) * w + x]; }
};

Plane channel(const Image& img, int ch) {
    Plane p(int(img.width), int(img.height));
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) p(x, y) = img.at(std::uint32_t(x), std::uint32_t(y), ch);
    return p;
}

// Separable valid correlation: output is (w - 10) x (h - 10).
Plane filter_valid(const Plane& in, const std::array<double, kSsimWindow>& k) {
    const int ow = in.w - kSsimWindow + 1, oh = in.h - kSsimWindow + 1;
    Plane tmp(ow, in.h);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) s += k[i] * in(x + i, y);
            tmp(x, y) = s;
        }
    Plane out(ow, oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) s += k[i] * tmp(x, y + i);
            out(x, y) = s;
        }
    return out;
}

// Adjoint of filter_valid: scatters a (w - 10) x (h - 10) map back to w x h.
Plane filter_adjoint(const Plane& in, int w, int h, const std::array<double, kSsimWindow>& k) {
    Plane tmp(in.w, h);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x)
            for (int i = 0; i < kSsimWindow; ++i) tmp(x, y + i) += k[i] * in(x, y);
    Plane out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < in.w; ++x)
            for (int i = 0; i < kSsimWindow; ++i) out(x + i, y) += k[i] * tmp(x, y);
    return out;
}

Plane product(const Plane& a, const Plane& b) {
    Plane out(a.w, a.h);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

double ssim_impl(const Image& a, const Image& b, std::vector<double>* grad) {
    require_same(a, b, "ssim");
    if (a.width < std::uint32_t(kSsimWindow) || a.height < std::uint32_t(kSsimWindow)) {
        throw Error("ssim: images must be at least 11x11");
    }
    const auto k = gaussian_window();
    const int w = int(a.width), h = int(a.height);
    const double n_valid = double(w - kSsimWindow + 1) * double(h - kSsimWindow + 1);
    if (grad) grad->assign(a.data.size(), 0.0);

    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        const Plane x = channel(a, ch), y = channel(b, ch);
        const Plane mx = filter_valid(x, k), my = filter_valid(y, k);
        const Plane exx = filter_valid(product(x, x), k), eyy = filter_valid(product(y, y), k);
        const Plane exy = filter_valid(product(x, y), k);
        Plane ca(mx.w, mx.h), cb(mx.w, mx.h), cc(mx.w, mx.h);
        double sum = 0.0;
        for (std::size_t i = 0; i < mx.v.size(); ++i) {
            const double ux = mx.v[i], uy = my.v[i];
            const double a1 = 2.0 * ux * uy + kSsimC1;
            const double a2 = 2.0 * (exy.v[i] - ux * uy) + kSsimC2;
            const double b1 = ux * ux + uy * uy + kSsimC1;
            const double b2 = (exx.v[i] - ux * ux) + (eyy.v[i] - uy * uy) + kSsimC2;
            const double s = (a1 * a2) / (b1 * b2);
            sum += s;
            if (grad) {
                // dS/dx_k = w_k (ca + cb y_k + cc x_k)
                ca.v[i] = s * (2.0 * uy / a1 - 2.0 * uy / a2 - 2.0 * ux / b1 + 2.0 * ux / b2);
                cb.v[i] = 2.0 * s / a2;
                cc.v[i] = -2.0 * s / b2;
            }
        }
        total += sum / n_valid;
        if (grad) {
            const Plane ga = filter_adjoint(ca, w, h, k), gb = filter_adjoint(cb, w, h, k),
                        gc = filter_adjoint(cc, w, h, k);
            const double scale = 1.0 / (3.0 * n_valid);
            for (int py = 0; py < h; ++py)
                for (int px = 0; px < w; ++px) {
                    const double g = ga(px, py) + gb(px, py) * y(px, py) + gc(px, py) * x(px, py);
                    (*grad)[a.offset(std::uint32_t(px), std::uint32_t(py)) + ch] = g * scale;
                }
        }
    }
    return total / 3.0;
}

} // namespace

double psnr(const Image& a, const Image& b) {
    require_same(a, b, "psnr");
    if (a.data.empty()) throw Error("psnr: empty image");
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    if (se == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(double(a.data.size()) / se);
}

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, nullptr); }

SsimResult ssim_with_gradient(const Image& a, const Image& b) {
    SsimResult r;
    r.value = ssim_impl(a, b, &r.grad);
    return r;
}

QualityReport compare(const Image& a, const Image& b) { return {psnr(a, b), ssim(a, b)}; }

} // namespace splatsim
