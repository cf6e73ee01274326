#include "derainkit/temporal.hpp"

#include <algorithm>

namespace derainkit {
namespace {

void require_consistent(const SceneStack& stack, const char* what) {
    if (stack.frames.empty()) throw Error(std::string(what) + ": empty stack");
    for (const Image& frame : stack.frames)
        require_same_size(frame, stack.frames.front(), what);
}

}  // namespace

Image temporal_median(const SceneStack& stack) {
    require_consistent(stack, "temporal_median");
    const int t_count = stack.frame_count();
    if (t_count == 1) return stack.frames.front();

    Image out(stack.frames.front().height, stack.frames.front().width);
    const std::size_t n = out.value_count();
    std::vector<double> column(t_count);
    const std::size_t mid = t_count / 2;
    for (std::size_t i = 0; i < n; ++i) {
        for (int t = 0; t < t_count; ++t) column[t] = stack.frames[t].data[i];
        std::nth_element(column.begin(), column.begin() + mid, column.end());
        if (t_count % 2 == 1) {
            out.data[i] = column[mid];
        } else {
            // lower central order statistic is the max of the left partition
            const double lo = *std::max_element(column.begin(), column.begin() + mid);
            out.data[i] = (lo + column[mid]) / 2.0;
        }
    }
    return out;
}

Image temporal_mean(const SceneStack& stack) {
    require_consistent(stack, "temporal_mean");
    const int t_count = stack.frame_count();
    if (t_count == 1) return stack.frames.front();

    Image out(stack.frames.front().height, stack.frames.front().width);
    const std::size_t n = out.value_count();
    // summing each pixel column in sorted order makes the mean bit-exact
    // under frame reordering
    std::vector<double> column(t_count);
    for (std::size_t i = 0; i < n; ++i) {
        for (int t = 0; t < t_count; ++t) column[t] = stack.frames[t].data[i];
        std::sort(column.begin(), column.end());
        double acc = 0.0;
        for (const double v : column) acc += v;
        out.data[i] = acc / t_count;
    }
    return out;
}

}  // namespace derainkit
