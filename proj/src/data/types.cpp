#include "pisa/data/types.hpp"

#include <algorithm>

#include "pisa/common/errors.hpp"

namespace pisa::data {

Day day_of(Timestamp t) {
  Day d = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --d;
  return d;
}

Catalog::Catalog(std::vector<CatalogRecord> records) : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second)
      throw DataError("catalog: duplicate item id " + std::to_string(raw(records_[i].id)));
    if (records_[i].category < 1) throw DataError("catalog: category ids start at 1");
  }
}

const CatalogRecord* Catalog::find(ItemId id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

int Catalog::max_category() const {
  int k = 0;
  for (const auto& r : records_) k = std::max(k, r.category);
  return k;
}

}  // namespace pisa::data
