//! Minimal CSV output: comma separator, '.' decimal point, one header
//! row, LF line endings. Fields never need quoting because every column
//! holds a number or a known identifier.

pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        let mut buf = header.join(",");
        buf.push('\n');
        Csv {
            buf,
            width: header.len(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        assert_eq!(fields.len(), self.width, "row width must match the header");
        for (i, field) in fields.iter().enumerate() {
            let field = field.as_ref();
            debug_assert!(
                !field.contains(',') && !field.contains('\n') && !field.contains('"'),
                "CSV fields must not need quoting, got {field:?}"
            );
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(field);
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// f64 Display is locale independent: always a '.' decimal point and the
/// shortest digit string that parses back to the same value.
pub fn num(v: f64) -> String {
    v.to_string()
}
