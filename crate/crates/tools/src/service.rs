//! HTTP facade over a loaded [`ServiceBundle`].
//!
//! | route             | handler          |
//! |-------------------|------------------|
//! | `GET /schema`     | [`api::schema`]  |
//! | `POST /score`     | [`api::score`]   |
//! | `POST /recourse`  | [`api::recourse`]|

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::CorsLayer;

use crate::api::{self, Reply};
use crate::bundle::ServiceBundle;
use crate::{ToolError, ToolResult};

fn respond(reply: Reply) -> Response {
    let status = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], reply.body).into_response()
}

pub fn router(bundle: Arc<ServiceBundle>) -> Router {
    Router::new()
        .route("/schema", get(|State(b): State<Arc<ServiceBundle>>| async move { respond(api::schema(&b)) }))
        .route(
            "/score",
            post(|State(b): State<Arc<ServiceBundle>>, body: String| async move { respond(api::score(&b, &body)) }),
        )
        .route(
            "/recourse",
            post(|State(b): State<Arc<ServiceBundle>>, body: String| async move {
                // engines are CPU bound
                let reply = tokio::task::spawn_blocking(move || api::recourse(&b, &body))
                    .await
                    .unwrap_or_else(|e| Reply { status: 500, body: format!("{{\"error\":\"{e}\"}}") });
                respond(reply)
            }),
        )
        .layer(CorsLayer::permissive())
        .with_state(bundle)
}

pub fn serve(bundle: ServiceBundle, port: u16) -> ToolResult<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| ToolError::Config(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| ToolError::io(addr.to_string(), e))?;
        eprintln!("listening on http://{addr}");
        axum::serve(listener, router(Arc::new(bundle))).await.map_err(|e| ToolError::io(addr.to_string(), e))
    })
}
