#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace a2a {

/// Base for every error raised by the library. `code()` is a stable
/// machine-readable name used in CLI exit messages and HTTP bodies.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define A2A_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(#Name, what) {}     \
    }

// ingest
class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line_no, const std::string& detail)
        : Error("MalformedRow", "line " + std::to_string(line_no) + ": " + detail),
          line_no_(line_no) {}
    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};
A2A_DEFINE_ERROR(EmptyFile);
A2A_DEFINE_ERROR(UnsortedInput);

// sequencer / vocab
A2A_DEFINE_ERROR(EmptyDataset);
A2A_DEFINE_ERROR(EmptyCorpus);
A2A_DEFINE_ERROR(UnknownLabel);
class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t line_no, const std::string& detail)
        : Error("DimensionMismatch", "line " + std::to_string(line_no) + ": " + detail),
          line_no_(line_no) {}
    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

// markov
A2A_DEFINE_ERROR(EmptyInput);
A2A_DEFINE_ERROR(UnknownState);

// rnn / trainer
A2A_DEFINE_ERROR(ShapeMismatch);
A2A_DEFINE_ERROR(IndexOutOfVocab);
A2A_DEFINE_ERROR(LabelOutOfRange);
A2A_DEFINE_ERROR(CacheMismatch);
A2A_DEFINE_ERROR(NonFiniteGradient);
A2A_DEFINE_ERROR(EmptyTrainingSet);
A2A_DEFINE_ERROR(CorruptCheckpoint);
A2A_DEFINE_ERROR(VocabularyHashMismatch);

// synth
A2A_DEFINE_ERROR(InvalidSpec);

// service
A2A_DEFINE_ERROR(ValidationError);
A2A_DEFINE_ERROR(NoModelLoaded);
A2A_DEFINE_ERROR(NoAlarmsInWindow);
A2A_DEFINE_ERROR(UnknownRecommendation);
A2A_DEFINE_ERROR(AlreadyResolved);
A2A_DEFINE_ERROR(MissingCorrection);
A2A_DEFINE_ERROR(RetrainInProgress);
A2A_DEFINE_ERROR(InsufficientData);

/// Violated precondition on a config or argument (e.g. epochs = 0).
A2A_DEFINE_ERROR(InvalidArgument);

#undef A2A_DEFINE_ERROR

}  // namespace a2a
