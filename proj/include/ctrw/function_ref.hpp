#pragma once

#include <concepts>
#include <memory>
#include <type_traits>
#include <utility>

namespace ctrw {

template <class Signature>
class FunctionRef;

// Non-owning reference to a callable. The referenced callable must outlive
// the FunctionRef; intended for passing integrands down a call chain.
template <class R, class... Args>
class FunctionRef<R(Args...)> {
public:
    template <class F>
        requires(!std::same_as<std::remove_cvref_t<F>, FunctionRef> && std::invocable<F&, Args...>)
    FunctionRef(F&& f) noexcept // NOLINT(google-explicit-constructor)
        : object_(const_cast<void*>(static_cast<const void*>(std::addressof(f)))),
          call_([](void* object, Args... args) -> R {
              return (*static_cast<std::remove_reference_t<F>*>(object))(std::forward<Args>(args)...);
          }) {}

    R operator()(Args... args) const { return call_(object_, std::forward<Args>(args)...); }

private:
    void* object_;
    R (*call_)(void*, Args...);
};

} // namespace ctrw
