#include "dpslr/budget.hpp"

#include "dpslr/errors.hpp"

namespace dpslr {

PrivacyBudget PrivacyBudget::pure(Rat eps) {
  PrivacyBudget b;
  b.flavor = BudgetFlavor::Pure;
  b.epsilon = eps;
  b.validate();
  return b;
}

PrivacyBudget PrivacyBudget::approx(Rat eps, Rat delta) {
  PrivacyBudget b;
  b.flavor = BudgetFlavor::Approx;
  b.epsilon = eps;
  b.delta = delta;
  b.validate();
  return b;
}

PrivacyBudget PrivacyBudget::zcdp(Rat rho) {
  PrivacyBudget b;
  b.flavor = BudgetFlavor::ZCDP;
  b.rho = rho;
  b.validate();
  return b;
}

void PrivacyBudget::validate() const {
  if (!nonnegative()) throw InvalidBudget("negative budget component");
  switch (flavor) {
    case BudgetFlavor::Pure:
      if (!delta.is_zero()) throw InvalidBudget("Pure budget with delta != 0");
      if (!rho.is_zero()) throw InvalidBudget("Pure budget with rho != 0");
      break;
    case BudgetFlavor::Approx:
      if (delta.is_zero() || delta > Rat(1)) {
        throw InvalidBudget("Approx budget needs delta in (0, 1]");
      }
      break;
    case BudgetFlavor::ZCDP:
      if (rho.is_zero()) throw InvalidBudget("ZCDP budget needs rho > 0");
      break;
  }
}

bool PrivacyBudget::nonnegative() const {
  return !epsilon.is_negative() && !delta.is_negative() && !rho.is_negative();
}

std::string PrivacyBudget::flavor_name() const {
  switch (flavor) {
    case BudgetFlavor::Pure:
      return "pure";
    case BudgetFlavor::Approx:
      return "approx";
    case BudgetFlavor::ZCDP:
      return "zcdp";
  }
  return "?";
}

BudgetLedger::BudgetLedger(PrivacyBudget total) : total_(std::move(total)) {
  total_.validate();
}

Rat BudgetLedger::spent_epsilon() const {
  Rat sum;
  for (const auto& e : entries_) sum = sum + e.spent.epsilon;
  return sum;
}

Rat BudgetLedger::spent_delta() const {
  Rat sum;
  for (const auto& e : entries_) sum = sum + e.spent.delta;
  return sum;
}

Rat BudgetLedger::spent_rho() const {
  Rat sum;
  for (const auto& e : entries_) sum = sum + e.spent.rho;
  return sum;
}

BudgetLedger spend(BudgetLedger ledger, const std::string& name,
                   const PrivacyBudget& amount) {
  if (!amount.nonnegative()) {
    throw InvalidBudget("spend amount must be non-negative in every field");
  }
  if (ledger.spent_epsilon() + amount.epsilon > ledger.total_.epsilon ||
      ledger.spent_delta() + amount.delta > ledger.total_.delta ||
      ledger.spent_rho() + amount.rho > ledger.total_.rho) {
    throw BudgetExceeded("spend '" + name + "' would exceed the total budget");
  }
  ledger.entries_.push_back(LedgerEntry{name, amount});
  return ledger;
}

}  // namespace dpslr
