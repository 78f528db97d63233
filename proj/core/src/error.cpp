#include "repacc/error.hpp"

namespace repacc {

std::string_view errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::NoChapterBoundary: return "NoChapterBoundary";
    case Errc::SingleChapterUnsplittable: return "SingleChapterUnsplittable";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownTarget: return "UnknownTarget";
    case Errc::PredicateNotInVocabulary: return "PredicateNotInVocabulary";
    case Errc::DuplicateAdd: return "DuplicateAdd";
    case Errc::MalformedExtraction: return "MalformedExtraction";
    case Errc::UnknownId: return "UnknownId";
    case Errc::ProviderFailure: return "ProviderFailure";
    case Errc::AuthMissing: return "AuthMissing";
    case Errc::InvalidJudgeOutput: return "InvalidJudgeOutput";
    case Errc::UnparseableLayer: return "UnparseableLayer";
    case Errc::FixedPointInTable: return "FixedPointInTable";
    case Errc::TooFewSubjects: return "TooFewSubjects";
    case Errc::NoValidQuestions: return "NoValidQuestions";
    case Errc::LeakageBlock: return "LeakageBlock";
    case Errc::AlreadyFrozen: return "AlreadyFrozen";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::MissingAsset: return "MissingAsset";
    case Errc::ContextBudgetExceeded: return "ContextBudgetExceeded";
    case Errc::EmptyCell: return "EmptyCell";
    case Errc::TooFewPairs: return "TooFewPairs";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NothingPairable: return "NothingPairable";
    case Errc::DegenerateX: return "DegenerateX";
    case Errc::Collinear: return "Collinear";
    case Errc::OutOfRangeScore: return "OutOfRangeScore";
    case Errc::NoSharedQuestions: return "NoSharedQuestions";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::MissingUpstream: return "MissingUpstream";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace repacc
