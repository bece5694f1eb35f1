#include "wpgeo/surface.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "wpgeo/errors.hpp"

namespace wpgeo {

namespace {

constexpr double kPi = std::numbers::pi;

// Dedups group elements through their orbit point g(0): the groups here are
// torsion free, so g(0) determines g up to sign.
class OrbitIndex {
public:
    // Returns the index of a stored element with the same orbit point, or -1.
    std::int64_t find(const Mobius& g) const {
        const Key k = key_of(g);
        // The angular cell index jumps across theta = +-pi; probe the wrapped row too.
        std::int64_t rows[2] = {k.j, k.j};
        if (std::abs(k.theta) > kPi - 1e-2) {
            const double wrapped = k.theta > 0.0 ? k.theta - 2.0 * kPi : k.theta + 2.0 * kPi;
            rows[1] = static_cast<std::int64_t>(std::floor(wrapped * std::sinh(k.d) / kCell));
        }
        for (std::int64_t row : rows) {
            for (std::int64_t di = -1; di <= 1; ++di) {
                for (std::int64_t dj = -1; dj <= 1; ++dj) {
                    auto it = cells_.find(pack(k.i + di, row + dj));
                    if (it == cells_.end()) {
                        continue;
                    }
                    for (std::int64_t idx : it->second) {
                        const Key& o = keys_[idx];
                        if (std::abs(o.d - k.d) < 1e-7 && angular_gap(o, k) < 1e-7) {
                            return idx;
                        }
                    }
                }
            }
            if (rows[1] == rows[0]) {
                break;
            }
        }
        return -1;
    }

    void insert(const Mobius& g) {
        const Key k = key_of(g);
        cells_[pack(k.i, k.j)].push_back(static_cast<std::int64_t>(keys_.size()));
        keys_.push_back(k);
    }

private:
    struct Key {
        double d;
        double theta;
        std::int64_t i;
        std::int64_t j;
    };

    static constexpr double kCell = 1e-3;

    static Key key_of(const Mobius& g) {
        const double d = displacement_of_origin(g);
        const Complex p = g.b() / g.d();
        const double theta = std::norm(p) > 0.0 ? std::arg(p) : 0.0;
        const double scale = std::sinh(d);
        return {d, theta, static_cast<std::int64_t>(std::floor(d / kCell)),
                static_cast<std::int64_t>(std::floor(theta * scale / kCell))};
    }

    static double angular_gap(const Key& a, const Key& b) {
        double gap = std::abs(a.theta - b.theta);
        gap = std::min(gap, 2.0 * kPi - gap);
        return gap * std::sinh(std::min(a.d, b.d));
    }

    static std::uint64_t pack(std::int64_t i, std::int64_t j) {
        return static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ull ^
               (static_cast<std::uint64_t>(j) + 0x632BE59BD9B4E019ull);
    }

    std::unordered_map<std::uint64_t, std::vector<std::int64_t>> cells_;
    std::vector<Key> keys_;
};

// Hyperboloid coordinates (x0; x1, x2) of a disk point.
struct Hyp {
    double t, x, y;
};

Hyp to_hyperboloid(Complex w) {
    const double n = std::norm(w);
    const double s = 1.0 / (1.0 - n);
    return {(1.0 + n) * s, 2.0 * w.real() * s, 2.0 * w.imag() * s};
}

Complex from_hyperboloid(const Hyp& h) {
    return Complex(h.x, h.y) / (1.0 + h.t);
}

std::vector<Mobius> letters_of(const FuchsianSurface& s) {
    std::vector<Mobius> out;
    out.reserve(2 * s.generators.size());
    for (const Mobius& g : s.generators) {
        out.push_back(g);
        out.push_back(g.inverse());
    }
    return out;
}

std::int8_t letter_for(std::size_t k) {
    // k even: generator k/2, k odd: its inverse.
    const auto gen = static_cast<std::int8_t>(k / 2 + 1);
    return (k % 2 == 0) ? gen : static_cast<std::int8_t>(-gen);
}

}  // namespace

Word inverse_word(const Word& w) {
    Word out(w.rbegin(), w.rend());
    for (auto& l : out) {
        l = static_cast<std::int8_t>(-l);
    }
    return out;
}

Word concat(const Word& lhs, const Word& rhs) {
    Word out = lhs;
    out.insert(out.end(), rhs.begin(), rhs.end());
    return reduce_word(out);
}

Word reduce_word(const Word& w) {
    Word out;
    out.reserve(w.size());
    for (auto l : w) {
        if (!out.empty() && out.back() == -l) {
            out.pop_back();
        } else {
            out.push_back(l);
        }
    }
    return out;
}

Mobius FuchsianSurface::evaluate(const Word& w) const {
    Mobius m;
    for (auto l : w) {
        const auto& g = generators.at(static_cast<std::size_t>(std::abs(l) - 1));
        m = m * (l > 0 ? g : g.inverse());
    }
    return m;
}

double FuchsianSurface::relator_residual() const { return evaluate(relator).distance_to_identity(); }

FuchsianSurface build_bolza() {
    // Regular octagon with interior angles pi/4, sides centred on the
    // directions k pi / 4. Opposite sides are paired by translations of twice
    // the inradius, cosh(inradius) = cot(pi/8) = 1 + sqrt(2).
    FuchsianSurface s;
    s.kind = SurfaceKind::Bolza;
    s.label = "bolza";
    const double length = 2.0 * std::acosh(1.0 + std::numbers::sqrt2);
    const Mobius t = Mobius::translation(length);
    for (int k = 0; k < 4; ++k) {
        const Mobius r = Mobius::rotation(k * kPi / 4.0);
        s.generators.push_back(r * t * r.inverse());
    }
    s.relator = {1, -2, 3, -4, -1, 2, -3, 4};
    return s;
}

FenchelNielsenCoords bolza_fn_coordinates() {
    const double systole = 2.0 * std::acosh(1.0 + std::numbers::sqrt2);
    const double second = 2.0 * std::acosh(3.0 + 2.0 * std::numbers::sqrt2);
    return {{systole, systole, second}, {0.0, 0.0, 0.5 * second}};
}

FuchsianSurface build_genus2_fn(const std::array<double, 3>& lengths,
                                const std::array<double, 3>& twists) {
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(lengths[i]) || lengths[i] < 0.1 || lengths[i] > 8.0) {
            throw InvalidFN("cuff length out of [0.1, 8]: " + std::to_string(lengths[i]));
        }
        if (!std::isfinite(twists[i])) {
            throw InvalidFN("non-finite twist");
        }
    }
    // Right-angled hexagon with alternate sides l_i / 2; seam c_i is opposite a_i.
    std::array<double, 3> a{};
    for (int i = 0; i < 3; ++i) {
        a[i] = 0.5 * lengths[i];
    }
    std::array<double, 3> seam{};
    for (int i = 0; i < 3; ++i) {
        const double aj = a[(i + 1) % 3];
        const double ak = a[(i + 2) % 3];
        const double ch = (std::cosh(aj) * std::cosh(ak) + std::cosh(a[i])) / (std::sinh(aj) * std::sinh(ak));
        if (!(ch > 1.0)) {
            throw InvalidFN("hexagon solve failed");
        }
        seam[i] = std::acosh(ch);
    }

    // Walk the hexagon a1, c3, a2, c1, a3, c2 turning left by a right angle at
    // each vertex; frames[k] sits at the start of side k pointing along it.
    const std::array<double, 6> walk = {a[0], seam[2], a[1], seam[0], a[2], seam[1]};
    std::array<Mobius, 6> frames;
    Mobius frame;
    const Mobius turn = Mobius::rotation(0.5 * kPi);
    for (int k = 0; k < 6; ++k) {
        frames[k] = frame;
        frame = frame * Mobius::translation(walk[k]) * turn;
    }
    if (frame.distance_to_identity() > 1e-8) {
        throw InvalidFN("hexagon does not close");
    }
    auto along = [&](int k, double dist) { return frames[k] * Mobius::translation(dist) * frames[k].inverse(); };

    // Boundary translations of the first pants (products of seam reflections),
    // A1 A2 A3 = I.
    const Mobius a1 = along(0, -lengths[0]);
    const Mobius a2 = along(2, -lengths[1]);
    // The second pants is the mirror of the first across cuff 1, shifted by the
    // twist; the HNN elements carry it onto the mirrors across cuffs 2 and 3.
    const Mobius tau1 = along(0, twists[0]);
    const Mobius tau2 = along(2, twists[1]);
    const Mobius tau3 = along(4, twists[2]);
    const Mobius refl21 = along(1, 2.0 * seam[2]);
    const Mobius refl31 = along(5, -2.0 * seam[1]);
    const Mobius t2 = tau2 * refl21 * tau1.inverse();
    const Mobius t3 = tau3 * refl31 * tau1.inverse();

    // Centre the group on the hexagon's barycentre.
    Hyp sum{0.0, 0.0, 0.0};
    for (const auto& f : frames) {
        const Hyp h = to_hyperboloid(f(Complex(0.0, 0.0)));
        sum.t += h.t;
        sum.x += h.x;
        sum.y += h.y;
    }
    const double norm = std::sqrt(sum.t * sum.t - sum.x * sum.x - sum.y * sum.y);
    const Complex centre = from_hyperboloid({sum.t / norm, sum.x / norm, sum.y / norm});
    const Mobius c = Mobius::to_origin(centre);

    FuchsianSurface s;
    s.kind = SurfaceKind::FenchelNielsen;
    s.fn = FenchelNielsenCoords{lengths, twists};
    s.label = "fenchel-nielsen";
    for (const Mobius& g : {a1, a2, t2, t3}) {
        s.generators.push_back(c * g * c.inverse());
    }
    // A1 (T2^-1 A2 T2) (T3^-1 A3 T3) with A3 = A2^-1 A1^-1.
    s.relator = {1, -3, 2, 3, -4, -2, -1, 4};
    s.cuff_words = {{1}, {2}, {-2, -1}};

    double shortest = 1e300;
    const ElementSet small = enumerate_group(s, 3);
    for (std::size_t i = 1; i < small.size(); ++i) {
        const double tr = std::abs(small[i].trace());
        if (tr > 2.0) {
            shortest = std::min(shortest, 2.0 * std::acosh(0.5 * tr));
        } else {
            shortest = 0.0;
        }
    }
    if (shortest < 1e-4) {
        throw DiscretenessSuspect("systole estimate below 1e-4");
    }
    return s;
}

Word ElementSet::word(std::size_t i) const {
    std::vector<std::int16_t> chain;
    for (auto k = static_cast<std::int64_t>(i); k >= 0 && parent_[k] >= 0; k = parent_[k]) {
        chain.push_back(step_[k]);
    }
    Word w;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const Word& step = steps_[static_cast<std::size_t>(*it)];
        w.insert(w.end(), step.begin(), step.end());
    }
    return reduce_word(w);
}

void ElementSet::push(const Mobius& g, std::int32_t parent, std::int16_t step, int depth) {
    elements_.push_back(g);
    parent_.push_back(parent);
    step_.push_back(step);
    depth_.push_back(depth);
}

ElementSet enumerate_group(const FuchsianSurface& s, int max_word_length) {
    constexpr std::size_t kBudget = 10'000'000;
    const std::vector<Mobius> letters = letters_of(s);
    ElementSet out;
    std::vector<Word> steps;
    for (std::size_t k = 0; k < letters.size(); ++k) {
        steps.push_back({letter_for(k)});
    }
    out.set_steps(steps);
    OrbitIndex index;
    out.push(Mobius::identity(), -1, 0, 0);
    index.insert(Mobius::identity());
    std::vector<std::int8_t> last_letter = {0};

    std::size_t level_begin = 0;
    for (int depth = 1; depth <= max_word_length; ++depth) {
        const std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i) {
            const std::int8_t prev = last_letter[i];
            for (std::size_t k = 0; k < letters.size(); ++k) {
                const std::int8_t l = letter_for(k);
                if (prev == -l) {
                    continue;
                }
                const Mobius g = out[i] * letters[k];
                if (index.find(g) >= 0) {
                    continue;
                }
                if (out.size() >= kBudget) {
                    throw BudgetExceeded("group enumeration exceeds 1e7 elements");
                }
                index.insert(g);
                out.push(g, static_cast<std::int32_t>(i), static_cast<std::int16_t>(k), depth);
                last_letter.push_back(l);
            }
        }
        level_begin = level_end;
    }
    return out;
}

namespace {

struct ClipVertex {
    Complex k;   // Klein coordinates
    int tag;     // candidate index of the outgoing edge, -1 for the bounding box
};

struct HalfPlane {
    // inside: n . k <= c
    double nx, ny, c;
};

HalfPlane bisector_half_plane(const Mobius& g) {
    const Hyp q = to_hyperboloid(g(Complex(0.0, 0.0)));
    // k . (q.x, q.y) <= q.t - 1, normalized by q.t for conditioning.
    return {q.x / q.t, q.y / q.t, 1.0 - 1.0 / q.t};
}

std::vector<ClipVertex> clip(const std::vector<ClipVertex>& poly, const HalfPlane& hp, int tag) {
    std::vector<ClipVertex> out;
    const std::size_t n = poly.size();
    auto f = [&](const Complex& k) { return hp.nx * k.real() + hp.ny * k.imag() - hp.c; };
    constexpr double eps = 1e-15;
    for (std::size_t i = 0; i < n; ++i) {
        const ClipVertex& p = poly[i];
        const ClipVertex& q = poly[(i + 1) % n];
        const double fp = f(p.k);
        const double fq = f(q.k);
        const bool pin = fp <= eps;
        const bool qin = fq <= eps;
        if (pin) {
            out.push_back(p);
            if (!qin) {
                const double t = fp / (fp - fq);
                out.push_back({p.k + t * (q.k - p.k), tag});
            }
        } else if (qin) {
            const double t = fp / (fp - fq);
            out.push_back({p.k + t * (q.k - p.k), p.tag});
        }
    }
    return out;
}

double interior_angle(Complex prev, Complex v, Complex next) {
    const Complex d1 = geodesic_direction(v, prev);
    const Complex d2 = geodesic_direction(v, next);
    return std::abs(std::arg(d1 / d2));
}

// Candidate elements for the Dirichlet domain: reduced words whose orbit
// point stays within `prune` of 0.
ElementSet pruned_ball(const FuchsianSurface& s, double prune, std::size_t budget) {
    const std::vector<Mobius> letters = letters_of(s);
    ElementSet out;
    std::vector<Word> steps;
    for (std::size_t k = 0; k < letters.size(); ++k) {
        steps.push_back({letter_for(k)});
    }
    out.set_steps(steps);
    OrbitIndex index;
    out.push(Mobius::identity(), -1, 0, 0);
    index.insert(Mobius::identity());
    std::size_t level_begin = 0;
    for (int depth = 1; level_begin < out.size(); ++depth) {
        const std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i) {
            for (std::size_t k = 0; k < letters.size(); ++k) {
                const Mobius g = out[i] * letters[k];
                if (displacement_of_origin(g) > prune || index.find(g) >= 0) {
                    continue;
                }
                if (out.size() >= budget) {
                    throw MeshFailure("Dirichlet candidate enumeration exceeded its budget");
                }
                index.insert(g);
                out.push(g, static_cast<std::int32_t>(i), static_cast<std::int16_t>(k), depth);
            }
        }
        level_begin = level_end;
    }
    return out;
}

std::optional<DirichletDomain> try_dirichlet(const FuchsianSurface& s, const ElementSet& cand) {
    std::vector<std::size_t> order(cand.size() - 1);
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i + 1;
    }
    std::vector<double> disp(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
        disp[i] = displacement_of_origin(cand[i]);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return disp[a] < disp[b]; });

    std::vector<ClipVertex> poly = {{{-1.0, -1.0}, -1}, {{1.0, -1.0}, -1}, {{1.0, 1.0}, -1}, {{-1.0, 1.0}, -1}};
    auto circumradius = [&]() {
        double r = 0.0;
        for (const auto& v : poly) {
            const double n = std::abs(v.k);
            if (n >= 1.0) {
                return 1e300;
            }
            r = std::max(r, hyperbolic_distance(Complex(0.0, 0.0), klein_to_poincare(v.k)));
        }
        return r;
    };
    double radius = 1e300;
    for (std::size_t n = 0; n < order.size(); ++n) {
        const std::size_t idx = order[n];
        if (disp[idx] > 2.0 * radius + 1e-9) {
            break;
        }
        poly = clip(poly, bisector_half_plane(cand[idx]), static_cast<int>(idx));
        if (n % 8 == 7 || radius < 1e299) {
            radius = circumradius();
        }
    }
    radius = circumradius();
    if (radius > 1e299) {
        return std::nullopt;
    }

    // Drop degenerate edges created where several bisectors meet at a vertex.
    std::vector<ClipVertex> clean;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const ClipVertex& v = poly[i];
        const ClipVertex& next = poly[(i + 1) % poly.size()];
        const double len = hyperbolic_distance(klein_to_poincare(v.k), klein_to_poincare(next.k));
        if (len > 1e-9) {
            clean.push_back(v);
        }
    }
    if (clean.size() < 3) {
        return std::nullopt;
    }
    for (const auto& v : clean) {
        if (v.tag < 0) {
            return std::nullopt;
        }
    }

    DirichletDomain dom;
    const std::size_t n = clean.size();
    double angle_sum = 0.0;
    dom.inradius = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        DirichletSide side;
        side.start = klein_to_poincare(clean[i].k);
        side.end = klein_to_poincare(clean[(i + 1) % n].k);
        side.element = cand[static_cast<std::size_t>(clean[i].tag)];
        side.element_word = cand.word(static_cast<std::size_t>(clean[i].tag));
        side.length = hyperbolic_distance(side.start, side.end);
        dom.sides.push_back(side);
        dom.inradius = std::min(dom.inradius, 0.5 * disp[static_cast<std::size_t>(clean[i].tag)]);
        const Complex prev = klein_to_poincare(clean[(i + n - 1) % n].k);
        angle_sum += interior_angle(prev, side.start, side.end);
    }
    dom.area = (static_cast<double>(n) - 2.0) * kPi - angle_sum;
    dom.circumradius = radius;

    for (std::size_t i = 0; i < n; ++i) {
        const Mobius inv = dom.sides[i].element.inverse();
        for (std::size_t j = 0; j < n; ++j) {
            if (dom.sides[j].element.equals_up_to_sign(inv, 1e-7)) {
                dom.sides[i].partner = static_cast<int>(j);
                break;
            }
        }
        const int p = dom.sides[i].partner;
        if (p < 0) {
            return std::nullopt;
        }
        // element^{-1} maps side i onto side p with reversed orientation.
        const DirichletSide& other = dom.sides[static_cast<std::size_t>(p)];
        const double e1 = hyperbolic_distance(inv(dom.sides[i].start), other.end);
        const double e2 = hyperbolic_distance(inv(dom.sides[i].end), other.start);
        if (e1 > 1e-7 || e2 > 1e-7) {
            return std::nullopt;
        }
    }
    const double expected = 4.0 * kPi * (s.genus - 1);
    if (std::abs(dom.area - expected) > 1e-8 * expected) {
        return std::nullopt;
    }
    return dom;
}

}  // namespace

DirichletDomain dirichlet_domain(const FuchsianSurface& s) {
    for (double prune = 8.0; prune <= 20.0; prune += 2.0) {
        const ElementSet cand = pruned_ball(s, prune, 4'000'000);
        if (auto dom = try_dirichlet(s, cand)) {
            return *dom;
        }
    }
    throw MeshFailure("Dirichlet domain did not close (non-discrete or very thin surface?)");
}

ElementSet certified_ball(const FuchsianSurface& /*s*/, const DirichletDomain& dom, double radius,
                          std::size_t budget) {
    // Tile g F meets B(0, radius) only if the orbit point g^{-1}(0) lies within
    // `radius` of every half-plane bounding F; that lower bound keeps the walk
    // conservative.
    struct Bisector {
        Hyp q;
        double scale;
    };
    std::vector<Bisector> bisectors;
    std::vector<Mobius> steps;
    std::vector<Word> step_words;
    for (const auto& side : dom.sides) {
        const Hyp q = to_hyperboloid(side.element(Complex(0.0, 0.0)));
        bisectors.push_back({q, std::sqrt(2.0 * (q.t - 1.0))});
        steps.push_back(side.element);
        step_words.push_back(side.element_word);
    }
    const double sinh_r = std::sinh(radius);
    auto tile_may_meet = [&](const Mobius& g) {
        const Hyp p = to_hyperboloid(g.inverse()(Complex(0.0, 0.0)));
        for (const auto& b : bisectors) {
            // <P, Q - O> in the Minkowski form; positive means outside the half-plane.
            const double inner = -(p.t * b.q.t) + p.x * b.q.x + p.y * b.q.y + p.t;
            if (inner > 0.0 && inner / b.scale > sinh_r) {
                return false;
            }
        }
        return true;
    };

    ElementSet visited;
    visited.set_steps(step_words);
    OrbitIndex index;
    visited.push(Mobius::identity(), -1, 0, 0);
    index.insert(Mobius::identity());
    std::vector<std::size_t> frontier = {0};
    while (!frontier.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : frontier) {
            for (std::size_t k = 0; k < steps.size(); ++k) {
                const Mobius g = visited[i] * steps[k];
                if (index.find(g) >= 0 || !tile_may_meet(g)) {
                    continue;
                }
                if (visited.size() >= budget) {
                    throw BudgetExceeded("certified ball enumeration exceeds its budget");
                }
                index.insert(g);
                visited.push(g, static_cast<std::int32_t>(i), static_cast<std::int16_t>(k),
                             visited.word_length(i) + 1);
                next.push_back(visited.size() - 1);
            }
        }
        frontier = std::move(next);
    }
    return visited;
}

SystoleResult systole(const FuchsianSurface& s, int max_word_length) {
    const ElementSet elems = enumerate_group(s, max_word_length);
    SystoleResult res;
    res.length = 1e300;
    for (std::size_t i = 1; i < elems.size(); ++i) {
        const double tr = std::abs(elems[i].trace());
        if (tr > 2.0 + 1e-12) {
            res.length = std::min(res.length, 2.0 * std::acosh(0.5 * tr));
        }
    }
    try {
        const DirichletDomain dom = dirichlet_domain(s);
        // A conjugate of any element of translation length <= L has its axis
        // through the domain, hence moves 0 by at most 2 R + L.
        const double radius = 2.0 * dom.circumradius + res.length;
        const ElementSet ball = certified_ball(s, dom, radius + 1e-6, 5'000'000);
        double best = 1e300;
        for (std::size_t i = 1; i < ball.size(); ++i) {
            if (displacement_of_origin(ball[i]) > radius + 1e-6) {
                continue;
            }
            const double tr = std::abs(ball[i].trace());
            if (tr > 2.0 + 1e-12) {
                best = std::min(best, 2.0 * std::acosh(0.5 * tr));
            }
        }
        res.certified = best >= res.length - 1e-9;
    } catch (const Error&) {
        res.certified = false;
    }
    return res;
}

std::vector<double> length_spectrum(const FuchsianSurface& s, const DirichletDomain& dom, double cutoff) {
    const double radius = 2.0 * dom.circumradius + cutoff;
    const ElementSet ball = certified_ball(s, dom, radius + 1e-6);
    std::vector<double> out;
    for (std::size_t i = 1; i < ball.size(); ++i) {
        const double tr = std::abs(ball[i].trace());
        if (tr <= 2.0 + 1e-12) {
            continue;
        }
        const double len = 2.0 * std::acosh(0.5 * tr);
        if (len < cutoff) {
            out.push_back(std::round(len * 1e7) / 1e7);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace wpgeo
