#include "teamrelax/json_out.hpp"

#include <cmath>
#include <cstdio>

namespace teamrelax {

std::string format_double(double v) {
    if (std::isnan(v)) return "\"nan\"";
    if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

JValue JValue::vec(const Vec& xs) {
    JValue v = array();
    for (double x : xs) v.push(JValue(x));
    return v;
}

JValue JValue::mat(const Mat& m) {
    JValue v = array();
    for (int r = 0; r < m.rows; ++r) {
        JValue row = array();
        for (int c = 0; c < m.cols; ++c) row.push(JValue(m(r, c)));
        v.push(std::move(row));
    }
    return v;
}

JValue JValue::tensor_flat(const Tensor4& t) {
    JValue v = array();
    for (double x : t.data) v.push(JValue(x));
    return v;
}

static void emit_string(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
}

void JValue::emit(std::string& out) const {
    switch (type_) {
        case Type::Null: out += "null"; break;
        case Type::Bool: out += bool_ ? "true" : "false"; break;
        case Type::Number: {
            if (integral_ && std::abs(num_) < 9.0e15) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(num_));
                out += buf;
            } else {
                out += format_double(num_);
            }
            break;
        }
        case Type::String: emit_string(str_, out); break;
        case Type::Array: {
            out += '[';
            for (size_t i = 0; i < arr_.size(); ++i) {
                if (i) out += ',';
                arr_[i].emit(out);
            }
            out += ']';
            break;
        }
        case Type::Object: {
            out += '{';
            bool first = true;
            for (const auto& [k, v] : obj_) {  // std::map keeps keys sorted
                if (!first) out += ',';
                first = false;
                emit_string(k, out);
                out += ':';
                v.emit(out);
            }
            out += '}';
            break;
        }
    }
}

std::string JValue::dump() const {
    std::string out;
    emit(out);
    return out;
}

} // namespace teamrelax
