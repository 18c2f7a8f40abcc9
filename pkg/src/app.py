from flask import Flask
from dotenv import load_dotenv
import logging
import os
from src.models.models import db
from src.routes.results import results_bp

logger = logging.getLogger(__name__)

def create_app(test_config=None):
    app = Flask(__name__)

    # 配置：.env / 环境变量中的 LAYERFV_DB_PATH，默认 instance/layerfv.db
    load_dotenv()
    default_path = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'instance', 'layerfv.db')
    db_path = os.environ.get('LAYERFV_DB_PATH', default_path)
    app.config['SQLALCHEMY_DATABASE_URI'] = f'sqlite:///{db_path}'
    app.config['SQLALCHEMY_TRACK_MODIFICATIONS'] = False
    app.config['JSON_AS_ASCII'] = False
    if test_config:
        app.config.update(test_config)
    if app.config['SQLALCHEMY_DATABASE_URI'] == f'sqlite:///{db_path}' and os.path.dirname(db_path):
        os.makedirs(os.path.dirname(db_path), exist_ok=True)
    logger.info("数据库：%s", app.config['SQLALCHEMY_DATABASE_URI'])

    # 初始化扩展
    db.init_app(app)

    # 注册蓝图
    app.register_blueprint(results_bp, url_prefix='/api')

    # 创建数据库表
    with app.app_context():
        db.create_all()

    return app

if __name__ == '__main__':
    app = create_app()
    app.run(debug=True)
