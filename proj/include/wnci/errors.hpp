#pragma once

#include <stdexcept>
#include <string>

namespace wnci {

// Every library failure derives from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class DefinitenessError : public Error { using Error::Error; };
class EmptyInputError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class StationarityError : public Error { using Error::Error; };
class EnsembleError : public Error { using Error::Error; };
class GenerationError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };

}  // namespace wnci
