use serde::Serializer;

/// JSON has no infinity; write it as the string `"inf"`.
pub fn ser_f64_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}
