#pragma once

#include <string>
#include <vector>

#include "dpslr/rat.hpp"

namespace dpslr {

enum class BudgetFlavor { Pure, Approx, ZCDP };

// Privacy-loss parameters with a flavor tag. Amounts are exact rationals so
// that ledgers can reach exact exhaustion (three spends of eps/3 consume a
// total of eps, with no floating-point slack in either direction).
struct PrivacyBudget {
  BudgetFlavor flavor = BudgetFlavor::Pure;
  Rat epsilon;
  Rat delta;
  Rat rho;

  static PrivacyBudget pure(Rat eps);
  static PrivacyBudget approx(Rat eps, Rat delta);
  static PrivacyBudget zcdp(Rat rho);

  // Flavor invariants: Pure => delta == 0, Approx => delta > 0,
  // ZCDP => rho > 0. Throws InvalidBudget.
  void validate() const;
  bool nonnegative() const;

  std::string flavor_name() const;
};

struct LedgerEntry {
  std::string mechanism;
  PrivacyBudget spent;
};

// Append-only record of budget spends against a fixed total, using basic
// composition (sums per component). Updates are functional: spend() returns
// a new ledger, so a ledger value can be shared across threads freely.
class BudgetLedger {
 public:
  explicit BudgetLedger(PrivacyBudget total);

  const PrivacyBudget& total() const { return total_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }

  Rat spent_epsilon() const;
  Rat spent_delta() const;
  Rat spent_rho() const;

 private:
  PrivacyBudget total_;
  std::vector<LedgerEntry> entries_;

  friend BudgetLedger spend(BudgetLedger ledger, const std::string& name,
                            const PrivacyBudget& amount);
};

// Appends an entry; throws BudgetExceeded when cumulative epsilon (or delta,
// or rho) would exceed the total.
BudgetLedger spend(BudgetLedger ledger, const std::string& name,
                   const PrivacyBudget& amount);

}  // namespace dpslr
