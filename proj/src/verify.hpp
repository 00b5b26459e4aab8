#pragma once

// Built-in verification pass: re-derives the library's core identities at
// runtime on freshly drawn random instances and reports one line per
// property family. Families:
//
//   kron-materialize   entries of kron(c, d) match the index formula
//   kron-apply         structured factored apply == materialized product
//   zero-init          fresh adapter + rescale leave the base function intact
//   merge              folded single weight reproduces the adapted forward
//   rescale-fold       folding the rescale == applying it after the affine
//   gradcheck          analytic gradients match central differences
//   rank               Kronecker rank product law and the adapter rank bound
//   determinism        a seeded training run repeats itself exactly

#include <string>
#include <vector>

namespace karst {

struct PropertyResult {
    std::string family;
    bool pass = false;
    std::string detail;  // worst error / counts, or what failed
};

struct VerifyReport {
    std::vector<PropertyResult> results;
    bool all_pass = true;

    std::string table() const;
};

VerifyReport run_verification(std::uint64_t seed = 20260823);

}  // namespace karst
