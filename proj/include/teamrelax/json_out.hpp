#pragma once

#include <map>
#include <string>
#include <vector>

#include "teamrelax/tensor.hpp"

namespace teamrelax {

/// Tiny JSON emitter with deterministic output: object keys sorted, floats
/// printed with 17 significant digits. Parsing is done with nlohmann/json;
/// this exists only because emitted reports must be byte-stable across runs.
class JValue {
  public:
    enum class Type { Null, Bool, Number, String, Array, Object };

    JValue() : type_(Type::Null) {}
    JValue(bool b) : type_(Type::Bool), bool_(b) {}
    JValue(double v) : type_(Type::Number), num_(v) {}
    JValue(int v) : type_(Type::Number), num_(v), integral_(true) {}
    JValue(long long v) : type_(Type::Number), num_(static_cast<double>(v)), integral_(true) {}
    JValue(unsigned long long v) : type_(Type::Number), num_(static_cast<double>(v)), integral_(true) {}
    JValue(const char* s) : type_(Type::String), str_(s) {}
    JValue(std::string s) : type_(Type::String), str_(std::move(s)) {}

    static JValue array() {
        JValue v;
        v.type_ = Type::Array;
        return v;
    }
    static JValue object() {
        JValue v;
        v.type_ = Type::Object;
        return v;
    }
    static JValue vec(const Vec& xs);
    static JValue mat(const Mat& m);          // nested arrays, row major
    static JValue tensor_flat(const Tensor4& t);

    JValue& push(JValue v) {
        arr_.push_back(std::move(v));
        return *this;
    }
    JValue& set(const std::string& key, JValue v) {
        obj_[key] = std::move(v);
        return *this;
    }

    std::string dump() const;  // compact, trailing newline added by callers

  private:
    void emit(std::string& out) const;

    Type type_;
    bool bool_ = false;
    double num_ = 0.0;
    bool integral_ = false;
    std::string str_;
    std::vector<JValue> arr_;
    std::map<std::string, JValue> obj_;
};

std::string format_double(double v);  // %.17g with inf/nan mapped to strings

} // namespace teamrelax
