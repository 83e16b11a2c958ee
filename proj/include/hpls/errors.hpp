#pragma once

#include <stdexcept>
#include <string>

namespace hpls {

// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define HPLS_DEFINE_ERROR(Name, Kind)                                              \
    class Name : public Error {                                                    \
    public:                                                                        \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}   \
    };

HPLS_DEFINE_ERROR(InvalidBasisConfig, config)
HPLS_DEFINE_ERROR(UnknownScenario, config)
HPLS_DEFINE_ERROR(FoldTooSmall, config)
HPLS_DEFINE_ERROR(IndexOutOfRange, config)
HPLS_DEFINE_ERROR(InvalidArgument, config)

HPLS_DEFINE_ERROR(DomainError, data)
HPLS_DEFINE_ERROR(ShapeMismatch, data)
HPLS_DEFINE_ERROR(ZeroVariancePredictor, data)
HPLS_DEFINE_ERROR(DegenerateScalarBlock, data)
HPLS_DEFINE_ERROR(EmptyInput, data)
HPLS_DEFINE_ERROR(IngestionError, data)
HPLS_DEFINE_ERROR(ZeroTruthNorm, data)

HPLS_DEFINE_ERROR(RankDeficient, numerical)
HPLS_DEFINE_ERROR(DegenerateResponse, numerical)
HPLS_DEFINE_ERROR(ZeroScoreVector, numerical)
HPLS_DEFINE_ERROR(DegenerateScale, numerical)
HPLS_DEFINE_ERROR(RankDeficientScores, numerical)

#undef HPLS_DEFINE_ERROR

} // namespace hpls
