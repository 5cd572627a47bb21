#include "cbfed/quadrature.hpp"

namespace cbfed {

namespace {

TriangleQuadrature make_degree8()
{
    TriangleQuadrature q;
    q.degree = 8;
    auto add = [&q](double a, double b, double c, double w) {
        q.points.push_back({a, b, c});
        q.weights.push_back(0.5 * w);
    };
    auto orbit3 = [&add](double a, double w) {
        const double b = 1.0 - 2.0 * a;
        add(a, a, b, w);
        add(a, b, a, w);
        add(b, a, a, w);
    };
    auto orbit6 = [&add](double a, double b, double w) {
        const double c = 1.0 - a - b;
        add(a, b, c, w);
        add(a, c, b, w);
        add(b, a, c, w);
        add(b, c, a, w);
        add(c, a, b, w);
        add(c, b, a, w);
    };

    // Dunavant (1985), degree 8.
    add(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.144315607677787);
    orbit3(0.459292588292723, 0.095091634267285);
    orbit3(0.170569307751760, 0.103217370534718);
    orbit3(0.050547228317031, 0.032458497623198);
    orbit6(0.008394777409958, 0.263112829634638, 0.027230314174435);
    return q;
}

EdgeQuadrature make_gauss5()
{
    constexpr double x1 = 0.9061798459386640, x2 = 0.5384693101056831;
    constexpr double w1 = 0.2369268850561891, w2 = 0.4786286704993665, w0 = 128.0 / 225.0;
    EdgeQuadrature q;
    q.degree = 9;
    const double xs[5] = {-x1, -x2, 0.0, x2, x1};
    const double ws[5] = {w1, w2, w0, w2, w1};
    for (int i = 0; i < 5; ++i) {
        q.points.push_back(0.5 * (xs[i] + 1.0));
        q.weights.push_back(0.5 * ws[i]);
    }
    return q;
}

} // namespace

const TriangleQuadrature& triangle_rule_degree8()
{
    static const TriangleQuadrature rule = make_degree8();
    return rule;
}

const EdgeQuadrature& edge_rule_degree9()
{
    static const EdgeQuadrature rule = make_gauss5();
    return rule;
}

} // namespace cbfed
