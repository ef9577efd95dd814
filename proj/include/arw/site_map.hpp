#ifndef ARW_SITE_MAP_HPP
#define ARW_SITE_MAP_HPP

#include <utility>
#include <vector>

namespace arw {

// Dense map from sites of Z to values, auto-growing at both ends.
// Constant-time access; iteration order is always left to right.
template <typename T>
class SiteMap {
public:
    T& at(int x) {
        ensure(x);
        return values_[static_cast<std::size_t>(x - lo_)];
    }

    T get(int x) const {
        if (values_.empty() || x < lo_ || x >= lo_ + static_cast<int>(values_.size()))
            return T{};
        return values_[static_cast<std::size_t>(x - lo_)];
    }

    bool empty() const noexcept { return values_.empty(); }
    int lo() const noexcept { return lo_; }
    int hi() const noexcept { return lo_ + static_cast<int>(values_.size()) - 1; }

    // Visits (site, value) pairs with value != T{}, left to right.
    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!(values_[i] == T{})) f(lo_ + static_cast<int>(i), values_[i]);
    }

    bool operator==(const SiteMap& o) const {
        bool equal = true;
        for_each([&](int x, const T& v) { if (!(o.get(x) == v)) equal = false; });
        o.for_each([&](int x, const T& v) { if (!(get(x) == v)) equal = false; });
        return equal;
    }

private:
    void ensure(int x) {
        if (values_.empty()) {
            lo_ = x - 16;
            values_.resize(33);
            return;
        }
        if (x < lo_) {
            const int new_lo = x - static_cast<int>(values_.size());
            std::vector<T> grown(values_.size() + static_cast<std::size_t>(lo_ - new_lo));
            for (std::size_t i = 0; i < values_.size(); ++i)
                grown[i + static_cast<std::size_t>(lo_ - new_lo)] = std::move(values_[i]);
            values_ = std::move(grown);
            lo_ = new_lo;
        } else if (x >= lo_ + static_cast<int>(values_.size())) {
            const std::size_t need = static_cast<std::size_t>(x - lo_) + 1;
            values_.resize(need + values_.size());
        }
    }

    int lo_ = 0;
    std::vector<T> values_;
};

using Odometer = SiteMap<std::uint64_t>;

} // namespace arw

#endif
