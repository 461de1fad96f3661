//! Readers for MovieLens dumps and generic triplet CSV files.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ratings::dataset::{Dataset, IdMap};
use crate::ratings::folds::FoldAssignment;
use crate::ratings::matrix::{Observation, RatingMatrix, RatingScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// ML-100k `u.data`: `user<TAB>item<TAB>rating<TAB>timestamp`.
    Ml100kData,
    /// Directory holding ML-100k's `u1..u5.{base,test}` files.
    Ml100kSplit,
    /// ML-1M `ratings.dat`: `UserID::MovieID::Rating::Timestamp`.
    Ml1m,
    /// `user,item,rating`, header optional.
    Csv,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml100k" | "ml100k-data" => Ok(DatasetFormat::Ml100kData),
            "ml100k-split" => Ok(DatasetFormat::Ml100kSplit),
            "ml1m" => Ok(DatasetFormat::Ml1m),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(Error::Config(format!("unknown dataset format '{other}'"))),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Ml100kData => "ml100k",
            DatasetFormat::Ml100kSplit => "ml100k-split",
            DatasetFormat::Ml1m => "ml1m",
            DatasetFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// `None` detects a header by whether the first rating field parses.
    pub has_header: Option<bool>,
    pub scale: RatingScale,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            has_header: None,
            scale: RatingScale::FIVE_STAR,
        }
    }
}

struct RawRecord {
    user: String,
    item: String,
    rating: u8,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_rating(path: &Path, line: usize, field: &str, scale: RatingScale) -> Result<u8> {
    let value: i64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("rating '{field}' is not an integer")))?;
    if !scale.contains(value) {
        return Err(Error::Validation(format!(
            "{}:{line}: rating {value} outside [{}, {}]",
            path.display(),
            scale.min,
            scale.max
        )));
    }
    Ok(value as u8)
}

fn read_movielens_records(path: &Path, separator: &str) -> Result<Vec<RawRecord>> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(separator).collect();
        if fields.len() != 4 {
            return Err(parse_error(
                path,
                line_no,
                format!("expected 4 fields separated by {separator:?}, found {}", fields.len()),
            ));
        }
        let (user, item) = (fields[0].trim(), fields[1].trim());
        if user.is_empty() || item.is_empty() {
            return Err(parse_error(path, line_no, "empty user or item id"));
        }
        let rating = parse_rating(path, line_no, fields[2], RatingScale::FIVE_STAR)?;
        // Timestamps are validated for shape and discarded.
        if fields[3].trim().parse::<i64>().is_err() {
            return Err(parse_error(path, line_no, format!("bad timestamp '{}'", fields[3])));
        }
        records.push(RawRecord {
            user: user.to_string(),
            item: item.to_string(),
            rating,
        });
    }
    Ok(records)
}

fn compact(records: &[RawRecord], scale: RatingScale) -> Result<(RatingMatrix, IdMap, IdMap)> {
    let users = IdMap::from_ids(records.iter().map(|r| r.user.as_str()));
    let items = IdMap::from_ids(records.iter().map(|r| r.item.as_str()));
    let triplets: Vec<Observation> = records
        .iter()
        .map(|r| {
            Observation::new(
                users.index_of(&r.user).unwrap(),
                items.index_of(&r.item).unwrap(),
                r.rating,
            )
        })
        .collect();
    let matrix = RatingMatrix::from_triplets(&triplets, users.len(), items.len(), scale)?;
    Ok((matrix, users, items))
}

fn dataset_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads a MovieLens dump. Raw ids are compacted to dense indices; the
/// [`IdMap`]s keep the mapping. For [`DatasetFormat::Ml100kSplit`], `path`
/// is the directory with `u1.test` .. `u5.test` and the returned dataset
/// carries those five folds.
pub fn load_movielens(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    let path = path.as_ref();
    match format {
        DatasetFormat::Ml100kData | DatasetFormat::Ml1m => {
            let sep = if format == DatasetFormat::Ml1m { "::" } else { "\t" };
            let records = read_movielens_records(path, sep)?;
            let (matrix, users, items) = compact(&records, RatingScale::FIVE_STAR)?;
            Ok(Dataset {
                name: dataset_name(path),
                matrix,
                users,
                items,
                folds: None,
            })
        }
        DatasetFormat::Ml100kSplit => load_ml100k_splits(path),
        DatasetFormat::Csv => Err(Error::Config(
            "csv is not a MovieLens format, use load_csv".into(),
        )),
    }
}

fn split_file(dir: &Path, fold: usize, kind: &str) -> PathBuf {
    dir.join(format!("u{fold}.{kind}"))
}

fn load_ml100k_splits(dir: &Path) -> Result<Dataset> {
    const K: usize = 5;
    let mut records = Vec::new();
    let mut fold_of_record = Vec::new();
    for fold in 1..=K {
        let test = read_movielens_records(&split_file(dir, fold, "test"), "\t")?;
        fold_of_record.extend(std::iter::repeat(fold as u16).take(test.len()));
        records.extend(test);
    }
    let (matrix, users, items) = compact(&records, RatingScale::FIVE_STAR)?;

    let mut fold_by_cell: HashMap<(usize, usize), u16> = HashMap::with_capacity(records.len());
    for (r, &f) in records.iter().zip(&fold_of_record) {
        let key = (users.index_of(&r.user).unwrap(), items.index_of(&r.item).unwrap());
        fold_by_cell.insert(key, f);
    }

    // Each base file, when present, must be exactly the complement of its
    // test file.
    for fold in 1..=K {
        let base_path = split_file(dir, fold, "base");
        if !base_path.exists() {
            continue;
        }
        let base = read_movielens_records(&base_path, "\t")?;
        let expected = records.len() - fold_of_record.iter().filter(|&&f| f as usize == fold).count();
        if base.len() != expected {
            return Err(Error::Validation(format!(
                "{} has {} ratings, expected {expected} (complement of u{fold}.test)",
                base_path.display(),
                base.len()
            )));
        }
        for (line, r) in base.iter().enumerate() {
            let cell = users
                .index_of(&r.user)
                .zip(items.index_of(&r.item))
                .and_then(|key| fold_by_cell.get(&key).map(|&f| (key, f)));
            match cell {
                Some((key, f)) if f as usize != fold && matrix.value(key.0, key.1) == r.rating => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "{}:{}: entry is not in the other test folds",
                        base_path.display(),
                        line + 1
                    )))
                }
            }
        }
    }

    let fold_of = matrix
        .observations()
        .map(|o| fold_by_cell[&(o.user, o.item)])
        .collect();
    Ok(Dataset {
        name: dataset_name(dir),
        matrix,
        users,
        items,
        folds: Some(FoldAssignment::new(K, fold_of)?),
    })
}

/// Loads `user,item,rating` triplets. Ids may be arbitrary strings.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() < 3 {
            return Err(parse_error(
                path,
                line,
                format!("expected user, item, rating; found {} fields", row.len()),
            ));
        }
        let is_header = match options.has_header {
            Some(h) => h && i == 0,
            None => i == 0 && row[2].parse::<i64>().is_err(),
        };
        if is_header {
            continue;
        }
        records.push(RawRecord {
            user: row[0].to_string(),
            item: row[1].to_string(),
            rating: parse_rating(path, line, &row[2], options.scale)?,
        });
    }
    let (matrix, users, items) = compact(&records, options.scale)?;
    Ok(Dataset {
        name: dataset_name(path),
        matrix,
        users,
        items,
        folds: None,
    })
}

/// Dispatches on `format`; CSV uses `csv_options`.
pub fn load_dataset(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    csv_options: &CsvOptions,
) -> Result<Dataset> {
    match format {
        DatasetFormat::Csv => load_csv(path, csv_options),
        other => load_movielens(path, other),
    }
}

/// Writes `user,item,rating` with a header, using the dataset's raw ids.
pub fn write_triplets_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "user,item,rating")?;
    for obs in dataset.matrix.observations() {
        writeln!(
            out,
            "{},{},{}",
            dataset.users.id_of(obs.user),
            dataset.items.id_of(obs.item),
            obs.rating
        )?;
    }
    out.flush()?;
    Ok(())
}
