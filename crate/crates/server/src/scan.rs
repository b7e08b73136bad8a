use std::io::Cursor;
use std::sync::Arc;

use accesslens::detector::{parse_detections, postprocess, Detection, ImageRef};
use accesslens::recommender::{recommend_scene, Recommendation};
use axum::extract::multipart::{Multipart, MultipartError};
use axum::http::StatusCode;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::ApiError;
use crate::AppState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub file_name: Option<String>,
    /// Name of the copy kept next to the result document.
    pub stored_as: String,
    pub content_type: Option<String>,
    pub format: String,
    pub width: u32,
    pub height: u32,
    pub size_bytes: usize,
}

/// Everything one scan produced. `recommendations` holds one entry per
/// detection outside `unidentifiable`, in detection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub scan_id: String,
    pub created_at: String,
    pub image: Option<ImageMeta>,
    /// Detector mode, or `precomputed` when detections came with the upload.
    pub detector: String,
    pub detections: Vec<Detection>,
    pub recommendations: Vec<Recommendation>,
    pub skipped_unidentifiable: usize,
}

pub(crate) struct Upload {
    pub file_name: Option<String>,
    pub content_type: Option<String>,
    pub bytes: Vec<u8>,
}

#[derive(Default)]
pub(crate) struct ScanRequest {
    pub image: Option<Upload>,
    pub detections: Option<Vec<Detection>>,
}

fn multipart_error(e: MultipartError, limit: usize) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::PayloadTooLarge { limit }
    } else {
        ApiError::BadRequest(e.body_text())
    }
}

pub(crate) async fn read_request(mut form: Multipart, limit: usize) -> Result<ScanRequest, ApiError> {
    let mut req = ScanRequest::default();
    while let Some(field) = form.next_field().await.map_err(|e| multipart_error(e, limit))? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "image" => {
                if req.image.is_some() {
                    return Err(ApiError::BadRequest("one image per scan".into()));
                }
                let file_name = field.file_name().map(str::to_string);
                let content_type = field.content_type().map(str::to_string);
                let bytes = field.bytes().await.map_err(|e| multipart_error(e, limit))?;
                if bytes.len() > limit {
                    return Err(ApiError::PayloadTooLarge { limit });
                }
                req.image = Some(Upload {
                    file_name,
                    content_type,
                    bytes: bytes.to_vec(),
                });
            }
            "detections" => {
                let text = field.text().await.map_err(|e| multipart_error(e, limit))?;
                req.detections = Some(parse_detections(&text)?);
            }
            other => return Err(ApiError::BadRequest(format!("unexpected field `{other}`"))),
        }
    }
    if req.image.is_none() && req.detections.is_none() {
        return Err(ApiError::BadRequest("expected an `image` or `detections` field".into()));
    }
    Ok(req)
}

fn decode(upload: &Upload) -> Result<ImageMeta, ApiError> {
    let reader = image::ImageReader::new(Cursor::new(&upload.bytes))
        .with_guessed_format()
        .map_err(|e| ApiError::BadImage(e.to_string()))?;
    let format = reader
        .format()
        .ok_or_else(|| ApiError::BadImage("unrecognized format".into()))?;
    let img = reader.decode().map_err(|e| ApiError::BadImage(e.to_string()))?;
    let ext = format.extensions_str().first().copied().unwrap_or("bin");
    Ok(ImageMeta {
        file_name: upload.file_name.clone(),
        stored_as: format!("image.{ext}"),
        content_type: upload.content_type.clone(),
        format: ext.to_string(),
        width: img.width(),
        height: img.height(),
        size_bytes: upload.bytes.len(),
    })
}

/// Run one scan to completion and persist it. Returns the stored bytes.
pub(crate) fn run_scan(state: &AppState, req: ScanRequest) -> Result<Vec<u8>, ApiError> {
    let meta = req.image.as_ref().map(decode).transpose()?;
    let (raw, detector) = match req.detections {
        Some(d) => (d, "precomputed".to_string()),
        None => {
            let upload = req.image.as_ref().expect("checked by read_request");
            let image_ref = ImageRef {
                image_id: None,
                file_name: upload.file_name.as_deref(),
                bytes: Some(&upload.bytes),
                content_type: upload.content_type.as_deref(),
            };
            (state.detector.detect(&image_ref)?, state.mode.to_string())
        }
    };
    let detections = postprocess(&raw, state.score_threshold, state.nms_iou);
    let catalog = state.catalog();
    let scene = recommend_scene(&detections, &catalog.dictionary, &catalog.mapping)?;

    let scan_id = Uuid::new_v4();
    let created_at: DateTime<Utc> = Utc::now();
    let result = ScanResult {
        scan_id: scan_id.hyphenated().to_string(),
        created_at: created_at.to_rfc3339_opts(SecondsFormat::Millis, true),
        image: meta,
        detector,
        detections,
        recommendations: scene.recommendations,
        skipped_unidentifiable: scene.skipped_unidentifiable,
    };
    let mut bytes = serde_json::to_vec_pretty(&result).map_err(|e| ApiError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    let image = match (&result.image, &req.image) {
        (Some(m), Some(u)) => Some((m.stored_as.as_str(), u.bytes.as_slice())),
        _ => None,
    };
    state
        .store
        .save(scan_id, &bytes, image)
        .map_err(|e| ApiError::Internal(format!("persisting scan: {e}")))?;
    tracing::info!(scan_id = %result.scan_id, detections = result.detections.len(), "scan stored");
    Ok(bytes)
}

pub(crate) async fn scan(state: Arc<AppState>, form: Multipart) -> Result<Vec<u8>, ApiError> {
    let req = read_request(form, state.max_upload_bytes).await?;
    tokio::task::spawn_blocking(move || run_scan(&state, req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}
