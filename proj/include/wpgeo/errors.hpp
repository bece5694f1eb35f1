#pragma once

#include <stdexcept>
#include <string>

namespace wpgeo {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can map the concrete type onto a stable exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define WPGEO_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what) : Error(what) {}    \
    }

WPGEO_DEFINE_ERROR(ElementNotHyperbolic);
WPGEO_DEFINE_ERROR(InvalidFN);
WPGEO_DEFINE_ERROR(DiscretenessSuspect);
WPGEO_DEFINE_ERROR(BudgetExceeded);
WPGEO_DEFINE_ERROR(MeshFailure);
WPGEO_DEFINE_ERROR(FieldMeshMismatch);
WPGEO_DEFINE_ERROR(RankDeficient);
WPGEO_DEFINE_ERROR(RankExcess);
WPGEO_DEFINE_ERROR(SolverFailure);
WPGEO_DEFINE_ERROR(NotUnitNorm);
WPGEO_DEFINE_ERROR(NotOrthonormal);
WPGEO_DEFINE_ERROR(ThinSurface);
WPGEO_DEFINE_ERROR(NonConvergence);
WPGEO_DEFINE_ERROR(FoldedTriangle);
WPGEO_DEFINE_ERROR(NormMismatch);
WPGEO_DEFINE_ERROR(NewtonFailure);
WPGEO_DEFINE_ERROR(OutOfRegime);
WPGEO_DEFINE_ERROR(InvalidSpec);

#undef WPGEO_DEFINE_ERROR

}  // namespace wpgeo
