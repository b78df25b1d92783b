use std::collections::BTreeMap;

use super::GamError;

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// Codes index into `levels`; level order is significant (the first
    /// level is the reference of a parametric factor).
    Factor { levels: Vec<String>, codes: Vec<usize> },
    Flag(Vec<bool>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Factor { codes, .. } => codes.len(),
            Column::Flag(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Column-oriented table of model inputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataFrame {
    n: usize,
    columns: BTreeMap<String, Column>,
}

impl DataFrame {
    pub fn new(n_rows: usize) -> Self {
        Self { n: n_rows, columns: BTreeMap::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn has(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    fn insert(&mut self, name: &str, col: Column) -> Result<(), GamError> {
        if col.len() != self.n {
            return Err(GamError::Data(format!("column \"{name}\" has {} rows, frame has {}", col.len(), self.n)));
        }
        self.columns.insert(name.to_string(), col);
        Ok(())
    }

    pub fn add_numeric(&mut self, name: &str, values: Vec<f64>) -> Result<(), GamError> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(GamError::Data(format!("column \"{name}\" contains non-finite value {bad}")));
        }
        self.insert(name, Column::Numeric(values))
    }

    pub fn add_flag(&mut self, name: &str, values: Vec<bool>) -> Result<(), GamError> {
        self.insert(name, Column::Flag(values))
    }

    /// Adds a factor whose levels are the sorted distinct values.
    pub fn add_factor<S: AsRef<str>>(&mut self, name: &str, values: &[S]) -> Result<(), GamError> {
        let mut levels: Vec<String> = values.iter().map(|v| v.as_ref().to_string()).collect();
        levels.sort();
        levels.dedup();
        self.add_factor_with_levels(name, values, &levels)
    }

    /// Adds a factor with an explicit level order. Every value must be one
    /// of `levels`; unused levels are kept.
    pub fn add_factor_with_levels<S: AsRef<str>>(&mut self, name: &str, values: &[S], levels: &[String]) -> Result<(), GamError> {
        let index: BTreeMap<&str, usize> = levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let codes = values
            .iter()
            .map(|v| {
                index.get(v.as_ref()).copied().ok_or_else(|| GamError::UnknownLevel { column: name.into(), level: v.as_ref().into() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.insert(name, Column::Factor { levels: levels.to_vec(), codes })
    }

    pub fn column(&self, name: &str) -> Result<&Column, GamError> {
        self.columns.get(name).ok_or_else(|| GamError::MissingColumn(name.into()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64], GamError> {
        match self.column(name)? {
            Column::Numeric(v) => Ok(v),
            _ => Err(GamError::Data(format!("column \"{name}\" is not numeric"))),
        }
    }

    pub fn factor(&self, name: &str) -> Result<(&[String], &[usize]), GamError> {
        match self.column(name)? {
            Column::Factor { levels, codes } => Ok((levels, codes)),
            _ => Err(GamError::Data(format!("column \"{name}\" is not a factor"))),
        }
    }

    pub fn flag(&self, name: &str) -> Result<&[bool], GamError> {
        match self.column(name)? {
            Column::Flag(v) => Ok(v),
            _ => Err(GamError::Data(format!("column \"{name}\" is not a flag"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_levels() {
        let mut f = DataFrame::new(3);
        f.add_factor("g", &["b", "a", "b"]).unwrap();
        let (levels, codes) = f.factor("g").unwrap();
        assert_eq!(levels, ["a", "b"]);
        assert_eq!(codes, [1, 0, 1]);
        let order = vec!["b".to_string(), "a".to_string(), "c".to_string()];
        f.add_factor_with_levels("h", &["a", "b", "a"], &order).unwrap();
        assert_eq!(f.factor("h").unwrap().1, [1, 0, 1]);
        assert!(matches!(f.add_factor_with_levels("x", &["z", "a", "a"], &order), Err(GamError::UnknownLevel { .. })));
    }

    #[test]
    fn length_and_type_checks() {
        let mut f = DataFrame::new(2);
        assert!(f.add_numeric("x", vec![1.0]).is_err());
        assert!(f.add_numeric("x", vec![1.0, f64::NAN]).is_err());
        f.add_numeric("x", vec![1.0, 2.0]).unwrap();
        assert!(f.factor("x").is_err());
        assert!(matches!(f.numeric("y"), Err(GamError::MissingColumn(_))));
    }
}
