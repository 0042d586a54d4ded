#pragma once

#include <stdexcept>
#include <string>

namespace ctap {

// Contiguous range of rail sites [first, last], inclusive, in global site numbering.
struct Section {
    int first = 0;
    int last = 2;

    int sites() const { return last - first + 1; }
    int span() const { return last - first; }
    bool contains(int site) const { return site >= first && site <= last; }
};

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;

    double length() const { return end - start; }
};

// Error hierarchy. Each failure mode named by the library has its own type so
// callers (and the validation suite) can report it by name.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CTAP_DEFINE_ERROR(Name)                       \
    class Name : public Error {                       \
    public:                                           \
        explicit Name(const std::string& what)        \
            : Error(std::string(#Name ": ") + what) {} \
    }

CTAP_DEFINE_ERROR(NonHermitianInput);
CTAP_DEFINE_ERROR(DidNotConverge);
CTAP_DEFINE_ERROR(InvalidGeometry);
CTAP_DEFINE_ERROR(SingularTime);
CTAP_DEFINE_ERROR(BadRates);
CTAP_DEFINE_ERROR(DimensionTooLarge);
CTAP_DEFINE_ERROR(TooManyBlocks);
CTAP_DEFINE_ERROR(DimensionMismatch);
CTAP_DEFINE_ERROR(UndefinedMixingAngle);
CTAP_DEFINE_ERROR(NormDrift);
CTAP_DEFINE_ERROR(PositivityLoss);
CTAP_DEFINE_ERROR(InvalidState);
CTAP_DEFINE_ERROR(ConfigError);

#undef CTAP_DEFINE_ERROR

}  // namespace ctap
