#pragma once

// Marked genus-2 Fuchsian groups: the Bolza surface, the Fenchel-Nielsen
// family, group enumeration, systoles and Dirichlet domains centred at 0.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wpgeo/hypgeo.hpp"

namespace wpgeo {

/// A word in the marked generators: letter +k means generator k-1,
/// letter -k its inverse. The empty word is the identity.
using Word = std::vector<std::int8_t>;

Word inverse_word(const Word& w);
Word concat(const Word& lhs, const Word& rhs);
/// Cancels adjacent inverse pairs.
Word reduce_word(const Word& w);

enum class SurfaceKind { Bolza, FenchelNielsen };

struct FenchelNielsenCoords {
    std::array<double, 3> lengths{};
    /// Hyperbolic length along each cuff; a full Dehn twist adds the cuff length.
    std::array<double, 3> twists{};
};

struct FuchsianSurface {
    int genus = 2;
    SurfaceKind kind = SurfaceKind::Bolza;
    std::vector<Mobius> generators;
    Word relator;
    /// Words realizing the three pants curves (Fenchel-Nielsen surfaces only).
    std::vector<Word> cuff_words;
    std::optional<FenchelNielsenCoords> fn;
    std::string label;

    Mobius evaluate(const Word& w) const;
    /// Distance of the relator word from +-I.
    double relator_residual() const;
};

FuchsianSurface build_bolza();

/// Two pants cut from right-angled hexagons, glued along their three cuffs.
/// Lengths must lie in [0.1, 8]. Throws InvalidFN or DiscretenessSuspect.
FuchsianSurface build_genus2_fn(const std::array<double, 3>& lengths,
                                const std::array<double, 3>& twists);

/// Fenchel-Nielsen coordinates whose surface is isometric to the Bolza surface.
FenchelNielsenCoords bolza_fn_coordinates();

/// Group elements with their words. Words are stored as parent links so very
/// large enumerations stay compact.
class ElementSet {
public:
    std::size_t size() const { return elements_.size(); }
    const Mobius& operator[](std::size_t i) const { return elements_[i]; }
    const std::vector<Mobius>& elements() const { return elements_; }
    Word word(std::size_t i) const;
    int word_length(std::size_t i) const { return depth_[i]; }

    /// Step words available to push(); element i = element(parent) * step.
    void set_steps(std::vector<Word> steps) { steps_ = std::move(steps); }
    void push(const Mobius& g, std::int32_t parent, std::int16_t step, int depth);

private:
    std::vector<Word> steps_;
    std::vector<Mobius> elements_;
    std::vector<std::int32_t> parent_;
    std::vector<std::int16_t> step_;
    std::vector<int> depth_;
};

/// All reduced words of length <= max_word_length, deduplicated as group
/// elements (sign-insensitive, 1e-9). Throws BudgetExceeded above 1e7 elements.
ElementSet enumerate_group(const FuchsianSurface& s, int max_word_length);

struct SystoleResult {
    double length = 0.0;
    /// True when a Dirichlet-domain ball argument rules out shorter geodesics.
    bool certified = false;
};

SystoleResult systole(const FuchsianSurface& s, int max_word_length);

struct DirichletSide {
    Complex start;          // Poincare coordinates, counter-clockwise order
    Complex end;
    Mobius element;         // side lies on the bisector of 0 and element(0)
    Word element_word;
    int partner = -1;       // index of the side element^{-1} maps this side onto
    double length = 0.0;
};

struct DirichletDomain {
    std::vector<DirichletSide> sides;
    double area = 0.0;          // Gauss-Bonnet area of the geodesic polygon
    double circumradius = 0.0;  // max distance from 0 to a vertex
    double inradius = 0.0;      // min distance from 0 to a side
};

/// Dirichlet domain centred at 0. Throws MeshFailure when no closed,
/// side-paired polygon of area 4 pi (g - 1) is found.
DirichletDomain dirichlet_domain(const FuchsianSurface& s);

/// Every element g whose tile g(F) meets the closed ball B(0, radius), found by
/// walking the tiling through side pairings; in particular every g with
/// d(0, g(0)) <= radius. A few tiles that only nearly meet the ball may be included.
ElementSet certified_ball(const FuchsianSurface& s, const DirichletDomain& dom, double radius,
                          std::size_t budget = 20'000'000);

/// Sorted distinct translation lengths below `cutoff` (rounded to 1e-7), from a
/// certified ball large enough to contain every closed geodesic of that length.
std::vector<double> length_spectrum(const FuchsianSurface& s, const DirichletDomain& dom,
                                    double cutoff);

}  // namespace wpgeo
