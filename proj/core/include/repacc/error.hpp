#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repacc {

enum class Errc {
  EmptyCorpus,
  NoChapterBoundary,
  SingleChapterUnsplittable,
  InvalidArgument,
  UnknownTarget,
  PredicateNotInVocabulary,
  DuplicateAdd,
  MalformedExtraction,
  UnknownId,
  ProviderFailure,
  AuthMissing,
  InvalidJudgeOutput,
  UnparseableLayer,
  FixedPointInTable,
  TooFewSubjects,
  NoValidQuestions,
  LeakageBlock,
  AlreadyFrozen,
  ChecksumMismatch,
  MissingAsset,
  ContextBudgetExceeded,
  EmptyCell,
  TooFewPairs,
  LengthMismatch,
  NothingPairable,
  DegenerateX,
  Collinear,
  OutOfRangeScore,
  NoSharedQuestions,
  GroupTooSmall,
  MissingUpstream,
  Io,
  Parse,
};

std::string_view errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace repacc
