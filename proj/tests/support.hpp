#pragma once

// Oracles and fixtures shared by the unit tests and the acceptance binary.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "arq/align.hpp"
#include "arq/context.hpp"
#include "arq/model.hpp"
#include "arq/revision.hpp"

namespace arq::testing {

std::filesystem::path data_dir();

/// The bundled synthetic corpus run through extraction and context
/// generation with the offline responder.
struct Prepared {
    std::vector<DraftPair> corpus;
    std::vector<Revision> revisions;
    ContextStore contexts;
};
Prepared prepare_synthetic(std::size_t max_essays, const std::vector<Condition>& conditions, int seed_runs);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

/// Best alignment objective by enumerating every monotone partial matching.
double brute_force_alignment_score(const SimilarityMatrix& sim, double threshold);

/// Random table with entries k/8, k in 0..8.
SimilarityMatrix random_eighths(std::size_t rows, std::size_t cols, Rng& rng);

/// Sentences "o0", "o1", ... and "r0", "r1", ... plus a similarity function
/// reading `table` through those names.
struct NamedDrafts {
    std::vector<Sentence> original, revised;
    SimilarityFn sim;
};
NamedDrafts named_drafts(const SimilarityMatrix& table);

struct GradCheck {
    double max_relative_error = 0.0;  ///< over parameter tensors
    std::string worst_tensor;
    std::size_t checked = 0;
    std::size_t skipped_at_kinks = 0;
};

/// Central differences (step 1e-4) of the mean batch loss against
/// backward(), dropout off, on a random net and batch drawn from `seed`.
/// Tensor error is |a - n| / max(|a| + |n|, 1e-6) in the 2-norm; entries
/// whose perturbation flips a relu are left out.
GradCheck gradient_check(std::uint64_t seed, std::size_t max_d = 8, std::size_t max_h = 8);

}  // namespace arq::testing
