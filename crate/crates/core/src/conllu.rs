//! Minimal CoNLL-U reader and writer.
//!
//! Only ID, FORM, UPOS, HEAD and DEPREL are consumed; multiword-token
//! ranges and empty nodes are skipped. Of the comments, only `sent_id` is
//! kept.

use std::io::{BufRead, Write};

use crate::corpus::{ParseTree, Sentence, Token};
use crate::error::{Error, Result};

struct Block {
    start_line: usize,
    sent_id: Option<String>,
    tokens: Vec<Token>,
    heads: Vec<Option<usize>>,
    head_lines: Vec<usize>,
    deprels: Vec<String>,
}

impl Block {
    fn new(start_line: usize) -> Self {
        Block {
            start_line,
            sent_id: None,
            tokens: Vec::new(),
            heads: Vec::new(),
            head_lines: Vec::new(),
            deprels: Vec::new(),
        }
    }

    fn finish(self, index: usize) -> Result<Sentence> {
        let err = |line, message: String| Error::Conllu { line, message };
        let id = self.sent_id.unwrap_or_else(|| (index + 1).to_string());
        let n = self.tokens.len();
        let mut sentence = Sentence::new(id, self.tokens)
            .map_err(|e| err(self.start_line, e.to_string()))?
            .with_deprels(self.deprels)
            .map_err(|e| err(self.start_line, e.to_string()))?;

        let present = self.heads.iter().filter(|h| h.is_some()).count();
        if present == 0 {
            return Ok(sentence);
        }
        if present != n {
            let line = self.heads
                .iter()
                .zip(&self.head_lines)
                .find(|(h, _)| h.is_none())
                .map_or(self.start_line, |(_, &l)| l);
            return Err(err(line, "HEAD missing for some tokens but not others".into()));
        }
        let heads: Vec<usize> = self.heads.into_iter().map(Option::unwrap).collect();
        for (&h, &line) in heads.iter().zip(&self.head_lines) {
            if h > n {
                return Err(err(line, format!("HEAD {h} out of range for {n} tokens")));
            }
        }
        sentence = sentence
            .with_gold_heads(heads)
            .map_err(|_| err(self.start_line, "gold heads not a tree".into()))?;
        Ok(sentence)
    }
}

pub fn read_conllu<R: BufRead>(reader: R) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut block: Option<Block> = None;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');

        if line.trim().is_empty() {
            if let Some(b) = block.take() {
                if !b.tokens.is_empty() {
                    sentences.push(b.finish(sentences.len())?);
                }
            }
            continue;
        }

        let b = block.get_or_insert_with(|| Block::new(line_no));

        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    b.sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 8 {
            return Err(Error::Conllu {
                line: line_no,
                message: format!("expected 10 tab-separated columns, got {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| Error::Conllu {
            line: line_no,
            message: format!("malformed ID {:?}", cols[0]),
        })?;
        if id != b.tokens.len() + 1 {
            return Err(Error::Conllu {
                line: line_no,
                message: format!("malformed ID sequence: expected {}, got {id}", b.tokens.len() + 1),
            });
        }
        let head = match cols[6] {
            "_" => None,
            h => Some(h.parse::<usize>().map_err(|_| Error::Conllu {
                line: line_no,
                message: format!("malformed HEAD {h:?}"),
            })?),
        };
        b.tokens.push(Token::new(cols[1], cols[3]));
        b.heads.push(head);
        b.head_lines.push(line_no);
        b.deprels.push(cols[7].to_string());
    }

    if let Some(b) = block.take() {
        if !b.tokens.is_empty() {
            sentences.push(b.finish(sentences.len())?);
        }
    }
    Ok(sentences)
}

/// Write sentences as CoNLL-U. Heads come from `trees` when given,
/// otherwise from the sentences' gold heads (or `_`).
pub fn write_conllu<W: Write>(
    mut writer: W,
    sentences: &[Sentence],
    trees: Option<&[ParseTree]>,
) -> Result<()> {
    if let Some(trees) = trees {
        if trees.len() != sentences.len() {
            return Err(Error::Misaligned(format!(
                "{} trees for {} sentences",
                trees.len(),
                sentences.len()
            )));
        }
    }
    for (k, s) in sentences.iter().enumerate() {
        let heads: Option<&[usize]> = match trees {
            Some(t) => Some(t[k].heads()),
            None => s.gold_heads(),
        };
        writeln!(writer, "# sent_id = {}", s.id())?;
        for (j, tok) in s.tokens().iter().enumerate() {
            let head = heads.map_or_else(|| "_".to_string(), |h| h[j].to_string());
            writeln!(
                writer,
                "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_",
                j + 1,
                tok.form,
                tok.upos,
                head,
                s.deprels()[j]
            )?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
