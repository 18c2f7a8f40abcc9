import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from src.app import create_app
from src.common.common import Scheme
from src.common.reference import TABLES
from src.models.models import db, PublishedReference

def init_reference_data(app=None):
    """把已发表的速度/压力误差表写入 published_references，已存在的格子只更新数值"""
    app = app or create_app()
    with app.app_context():
        # 确保表已创建
        db.create_all()

        added, updated = 0, 0
        for quantity, table in TABLES.items():
            for (n, eps), values in table.items():
                for scheme, value in zip(Scheme.ALL, values):
                    existing = PublishedReference.query.filter_by(
                        quantity=quantity, n=n, eps=eps, scheme=scheme
                    ).first()
                    if existing:
                        existing.value = value
                        updated += 1
                    else:
                        db.session.add(PublishedReference(
                            quantity=quantity, n=n, eps=eps, scheme=scheme, value=value
                        ))
                        added += 1

        try:
            db.session.commit()
            print(f"参考数据初始化完成：新增 {added} 条，更新 {updated} 条")
        except Exception as e:
            db.session.rollback()
            print(f"参考数据初始化失败：{str(e)}")
            raise
        return added, updated

if __name__ == '__main__':
    init_reference_data()
